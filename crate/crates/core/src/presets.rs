//! Named device presets.

use serde::{Deserialize, Serialize};

use crate::grid::FrequencyGrid;
use crate::linemodel::{
    calibrate_loaded_line, supercell_bloch, DispersionTable, FilmLine, LineError, StubPattern,
};
use crate::phasematch::PumpConfig;

pub const NBTIN_4TO8: &str = "nbtin-4to8";
pub const NBTIN_4TO8_122UM: &str = "nbtin-4to8-122um";

/// A device (calibrated line plus stub pattern) with its nominal pump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub line: FilmLine,
    pub pattern: StubPattern,
    pub pump: PumpConfig,
    pub grid: FrequencyGrid,
}

impl Preset {
    pub fn names() -> &'static [&'static str] {
        &[NBTIN_4TO8, NBTIN_4TO8_122UM]
    }

    pub fn by_name(name: &str) -> Option<Preset> {
        match name {
            NBTIN_4TO8 => Some(Self::nbtin_4to8()),
            NBTIN_4TO8_122UM => Some(Self::nbtin_4to8_122um()),
            _ => None,
        }
    }

    /// NbTiN film line, 2.2 um stub pitch, 10.8 um mean stubs with 2.08 um
    /// swing over a 122.7 um period; 10 cm long. Pump at 10.6 GHz with
    /// `i_p / i_star = 0.119`.
    pub fn nbtin_4to8() -> Preset {
        Self::build(NBTIN_4TO8, 122.7e-6)
    }

    /// As [`Preset::nbtin_4to8`] with a 122 um modulation period.
    pub fn nbtin_4to8_122um() -> Preset {
        Self::build(NBTIN_4TO8_122UM, 122e-6)
    }

    fn build(name: &str, mod_period: f64) -> Preset {
        let i_star = 3.2e-3;
        let line = FilmLine::new(16.64e-6, 6.45e-9, i_star, 0.1)
            .with_self_targets()
            .expect("preset values are positive");
        let pattern = StubPattern::new(2.2e-6, 10.8e-6, 2.08e-6, mod_period);
        let line = calibrate_loaded_line(&line, &pattern).expect("preset calibrates");
        Preset {
            name: name.to_string(),
            line,
            pattern,
            pump: PumpConfig::new(10.6e9, 0.119 * i_star),
            grid: FrequencyGrid::default_dispersion(),
        }
    }

    /// Pump used for compression runs: -23 dBm at 10.6 GHz.
    pub fn compression_pump(&self) -> PumpConfig {
        PumpConfig::from_dbm(self.pump.f_pump, -23.0)
    }

    pub fn dispersion(&self) -> Result<DispersionTable, LineError> {
        self.dispersion_on(&self.grid)
    }

    /// Dispersion on [`FrequencyGrid::mixing`], as needed by the gain solver.
    pub fn mixing_dispersion(&self) -> Result<DispersionTable, LineError> {
        self.dispersion_on(&FrequencyGrid::mixing())
    }

    pub fn dispersion_on(&self, grid: &FrequencyGrid) -> Result<DispersionTable, LineError> {
        supercell_bloch(&self.line, &self.pattern, &grid.points())
    }
}
