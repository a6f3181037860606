//! Stub-loaded nonlinear transmission line: network model, Bloch dispersion,
//! loaded-line calibration and kinetic-inductance nonlinearity.

mod bloch;
mod calibrate;
mod istar;
mod twoport;

pub use bloch::{supercell_bloch, supercell_matrix, DispersionTable, LookupError, STOPBAND_EPS};
pub use calibrate::{calibrate_loaded_line, calibrate_loaded_line_with, CalibrationOptions};
pub use istar::{fit_istar, stopband_shift_model, IstarFit};
pub use twoport::{unit_cell_matrix, TwoPortMatrix};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::SPEED_OF_LIGHT;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LineError {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("invalid stub pattern: {0}")]
    InvalidPattern(String),
    #[error("stub admittance is singular at {f} Hz")]
    SingularFrequency { f: f64 },
    #[error("frequency grid is empty")]
    EmptyGrid,
    #[error("loaded-line calibration needs both z_target and v_target")]
    MissingTarget,
    #[error("loaded-line calibration did not converge (relative residual {residual:.3e})")]
    CalibrationFailed { residual: f64 },
    #[error("I* fit failed: {0}")]
    FitDegenerate(String),
}

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<f64, LineError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(LineError::NonPositive { name, value })
    }
}

/// Per-length electricals of the bare line and of the stubs, as resolved by
/// [`calibrate_loaded_line`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkElectricals {
    pub bare_l_per_m: f64,
    pub bare_c_per_m: f64,
    pub stub_l_per_m: f64,
    pub stub_c_per_m: f64,
}

/// Electrical description of the nonlinear film line.
///
/// `l_per_m` and `c_per_m` are the loaded (effective-medium) values. Before
/// calibration the network model uses them as the bare-line values; after
/// [`calibrate_loaded_line`] the bare-line and stub electricals that
/// reproduce the loaded targets are carried in `network`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilmLine {
    pub l_per_m: f64,
    pub c_per_m: f64,
    pub i_star: f64,
    pub total_length: f64,
    /// Loaded characteristic impedance target, ohm.
    pub z_target: Option<f64>,
    /// Loaded phase velocity target as a fraction of c.
    pub v_target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkElectricals>,
}

impl FilmLine {
    pub fn new(l_per_m: f64, c_per_m: f64, i_star: f64, total_length: f64) -> Self {
        Self {
            l_per_m,
            c_per_m,
            i_star,
            total_length,
            z_target: None,
            v_target: None,
            network: None,
        }
    }

    /// Sets the loaded-line targets to the telegrapher values of `l_per_m`
    /// and `c_per_m`.
    pub fn with_self_targets(mut self) -> Result<Self, LineError> {
        let (z, v) = telegrapher_params(&self)?;
        self.z_target = Some(z);
        self.v_target = Some(v / SPEED_OF_LIGHT);
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), LineError> {
        require_positive("l_per_m", self.l_per_m)?;
        require_positive("c_per_m", self.c_per_m)?;
        require_positive("i_star", self.i_star)?;
        require_positive("total_length", self.total_length)?;
        if let Some(z) = self.z_target {
            require_positive("z_target", z)?;
        }
        if let Some(v) = self.v_target {
            require_positive("v_target", v)?;
        }
        Ok(())
    }

    /// Loaded phase velocity, m/s.
    pub fn phase_velocity(&self) -> f64 {
        1.0 / (self.l_per_m * self.c_per_m).sqrt()
    }

    /// Loaded characteristic impedance, ohm.
    pub fn impedance(&self) -> f64 {
        (self.l_per_m / self.c_per_m).sqrt()
    }

    pub(crate) fn electricals(&self) -> NetworkElectricals {
        self.network.unwrap_or(NetworkElectricals {
            bare_l_per_m: self.l_per_m,
            bare_c_per_m: self.c_per_m,
            stub_l_per_m: self.l_per_m,
            stub_c_per_m: self.c_per_m,
        })
    }
}

/// Geometry of the capacitive stubs and their periodic length modulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StubPattern {
    /// Stub-to-stub spacing, m.
    pub cell_pitch: f64,
    /// Mean stub length, m.
    pub stub_len_avg: f64,
    /// Peak-to-peak swing of the stub length over one modulation period, m.
    pub stub_len_mod: f64,
    /// Spatial period of the length modulation, m.
    pub mod_period: f64,
    /// Stub characteristic impedance override, ohm.
    #[serde(default)]
    pub stub_z0: Option<f64>,
    /// Stub phase velocity override, m/s.
    #[serde(default)]
    pub stub_vph: Option<f64>,
}

impl StubPattern {
    pub fn new(cell_pitch: f64, stub_len_avg: f64, stub_len_mod: f64, mod_period: f64) -> Self {
        Self {
            cell_pitch,
            stub_len_avg,
            stub_len_mod,
            mod_period,
            stub_z0: None,
            stub_vph: None,
        }
    }

    /// A pattern without stubs: the network reduces to the bare line.
    pub fn unloaded(cell_pitch: f64) -> Self {
        Self::new(cell_pitch, 0.0, 0.0, 2.0 * cell_pitch)
    }

    pub fn cells_per_period(&self) -> usize {
        (self.mod_period / self.cell_pitch).round() as usize
    }

    /// Supercell length. The supercell spans exactly one modulation period.
    pub fn supercell_length(&self) -> f64 {
        self.mod_period
    }

    /// Cell pitch used inside the supercell, `mod_period / cells_per_period`.
    /// It differs from `cell_pitch` by the rounding of the cell count.
    pub fn effective_pitch(&self) -> f64 {
        self.mod_period / self.cells_per_period() as f64
    }

    /// Stub length of every cell in one supercell.
    pub fn stub_lengths(&self) -> Vec<f64> {
        let n = self.cells_per_period();
        (0..n)
            .map(|i| {
                let phase = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                self.stub_len_avg + 0.5 * self.stub_len_mod * phase.cos()
            })
            .collect()
    }

    pub fn mean_stub_length(&self) -> f64 {
        let lens = self.stub_lengths();
        lens.iter().sum::<f64>() / lens.len() as f64
    }

    pub fn is_unloaded(&self) -> bool {
        self.stub_len_avg == 0.0 && self.stub_len_mod == 0.0
    }

    pub fn validate(&self) -> Result<(), LineError> {
        require_positive("cell_pitch", self.cell_pitch)?;
        require_positive("mod_period", self.mod_period)?;
        if !(self.stub_len_avg >= 0.0 && self.stub_len_avg.is_finite()) {
            return Err(LineError::InvalidPattern(format!(
                "stub_len_avg must be >= 0, got {}",
                self.stub_len_avg
            )));
        }
        if !(self.stub_len_mod >= 0.0 && self.stub_len_mod.is_finite()) {
            return Err(LineError::InvalidPattern(format!(
                "stub_len_mod must be >= 0, got {}",
                self.stub_len_mod
            )));
        }
        if self.mod_period < self.cell_pitch {
            return Err(LineError::InvalidPattern(format!(
                "mod_period {} is shorter than cell_pitch {}",
                self.mod_period, self.cell_pitch
            )));
        }
        if self.cells_per_period() < 2 {
            return Err(LineError::InvalidPattern(
                "fewer than two cells per modulation period".into(),
            ));
        }
        if 0.5 * self.stub_len_mod > self.stub_len_avg {
            return Err(LineError::InvalidPattern(
                "modulation swing makes some stub lengths negative".into(),
            ));
        }
        if let Some(z) = self.stub_z0 {
            require_positive("stub_z0", z)?;
        }
        if let Some(v) = self.stub_vph {
            require_positive("stub_vph", v)?;
        }
        Ok(())
    }
}

/// Characteristic impedance and phase velocity of a uniform line.
pub fn telegrapher_params(line: &FilmLine) -> Result<(f64, f64), LineError> {
    let l = require_positive("l_per_m", line.l_per_m)?;
    let c = require_positive("c_per_m", line.c_per_m)?;
    Ok(((l / c).sqrt(), 1.0 / (l * c).sqrt()))
}

/// Current-dependent kinetic inductance, `lk0 (1 + i^2 / i_star^2)`.
///
/// Quartic and higher terms are dropped.
pub fn lk_of_current(lk0: f64, i: f64, i_star: f64) -> f64 {
    let r = i / i_star;
    lk0 * (1.0 + r * r)
}
