//! Y-factor and cascaded-noise calibration of a parametric amplifier
//! measurement chain. Noise is expressed in quanta (photons per second per
//! hertz of bandwidth) referred to the indicated plane.

mod pipeline;
mod synth;

pub use pipeline::{
    deembed_loss, extract_added_noise, hemt_noise_from_yfactor, hemt_noise_per_bin, moving_average,
    BinFlags, ExtractionInputs, ExtractionResult, HemtNoise, HemtResult, LossEstimate,
};
pub use synth::{synth_measurement, SynthTraces};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{BOLTZMANN, HBAR, PLANCK};
use crate::trace::TraceError;

/// Vacuum noise, quanta.
pub const N_QM: f64 = 0.5;

#[derive(Debug, Error)]
pub enum NoiseError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("Y = {y} must exceed 1 (hot and cold indistinguishable or swapped)")]
    InvalidY { y: f64 },
    #[error("traces '{0}' and '{1}' are on different frequency grids")]
    GridMismatch(String, String),
    #[error("trace '{name}' must be in {expected}")]
    Unit {
        name: String,
        expected: crate::trace::TraceUnit,
    },
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Amplifier pump condition seen by the analyzer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpState {
    On,
    /// Device unpumped: a lossless through line.
    Off,
    /// Device and its input/output components bypassed.
    Bypass,
}

/// Measurement cascade: loss `l1`, device, loss `l2`, HEMT, warm stage.
///
/// Losses are power transmission factors; gains are linear power ratios;
/// noises are in quanta referred to the input of each stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseChain {
    pub l1: f64,
    pub l2: f64,
    pub g_pa: f64,
    pub n_a: f64,
    pub g_hemt: f64,
    pub n_hemt: f64,
    pub g_w: f64,
    #[serde(default)]
    pub n_w: f64,
    pub t_hot: f64,
    pub t_cold: f64,
}

impl NoiseChain {
    /// 3.18 K / 20 mK loads, 38 dB HEMT, unity warm stage, lossless.
    pub fn nominal(g_pa: f64, n_a: f64, n_hemt: f64) -> Self {
        Self {
            l1: 1.0,
            l2: 1.0,
            g_pa,
            n_a,
            g_hemt: 10f64.powf(3.8),
            n_hemt,
            g_w: 1.0,
            n_w: 0.0,
            t_hot: 3.18,
            t_cold: 0.020,
        }
    }

    pub fn with_losses(mut self, l1: f64, l2: f64) -> Self {
        self.l1 = l1;
        self.l2 = l2;
        self
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(NoiseError::Domain(format!("{name} must lie in (0, 1], got {v}")))
            }
        };
        unit("l1", self.l1)?;
        unit("l2", self.l2)?;
        for (name, v) in [("g_pa", self.g_pa), ("g_hemt", self.g_hemt), ("g_w", self.g_w)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(NoiseError::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("n_a", self.n_a), ("n_hemt", self.n_hemt), ("n_w", self.n_w)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(NoiseError::Domain(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.t_cold > 0.0 && self.t_hot > self.t_cold) {
            return Err(NoiseError::Domain(format!(
                "need t_hot > t_cold > 0, got {} and {}",
                self.t_hot, self.t_cold
            )));
        }
        Ok(())
    }
}

/// Thermal occupation of a matched load, `coth(hbar w / 2 k_B T) / 2`.
pub fn occupation(t: f64, f: f64) -> Result<f64, NoiseError> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(NoiseError::Domain(format!("temperature must be positive, got {t}")));
    }
    if !(f > 0.0 && f.is_finite()) {
        return Err(NoiseError::Domain(format!("frequency must be positive, got {f}")));
    }
    let x = HBAR * 2.0 * std::f64::consts::PI * f / (2.0 * BOLTZMANN * t);
    // coth x = 1 + 2 / (e^{2x} - 1), stable for small and large x.
    Ok(0.5 * (1.0 + 2.0 / (2.0 * x).exp_m1()))
}

/// Amplifier noise temperature to quanta, `T / (h f / k_B)`.
pub fn kelvin_to_quanta(t: f64, f: f64) -> f64 {
    t * BOLTZMANN / (PLANCK * f)
}

/// Inverse of [`kelvin_to_quanta`].
pub fn quanta_to_kelvin(n: f64, f: f64) -> f64 {
    n * PLANCK * f / BOLTZMANN
}

/// System noise from the hot/cold power ratio `y`.
pub fn y_factor_nsys(n_hot: f64, n_cold: f64, y: f64) -> Result<f64, NoiseError> {
    if !(y > 1.0) {
        return Err(NoiseError::InvalidY { y });
    }
    Ok((n_hot - y * n_cold) / (y - 1.0))
}

/// Noise power at the analyzer (quanta times total gain) for a matched
/// source at `t_source`, evaluated stage by stage.
pub fn cascade_forward(chain: &NoiseChain, t_source: f64, f: f64, pump: PumpState) -> Result<f64, NoiseError> {
    let n_in = occupation(t_source, f)?;
    Ok(match pump {
        PumpState::On => {
            let n1 = chain.l1 * n_in + N_QM * (1.0 - chain.l1);
            let n2 = chain.g_pa * (n1 + chain.n_a);
            let n3 = chain.l2 * n2 + N_QM * (1.0 - chain.l2);
            let n4 = chain.g_hemt * (n3 + chain.n_hemt);
            chain.g_w * (n4 + chain.n_w)
        }
        PumpState::Off => {
            let l = chain.l1 * chain.l2;
            let g_eff = chain.g_w * chain.g_hemt * l;
            g_eff * (n_in + (N_QM * (1.0 - l) + chain.n_hemt) / l) + chain.g_w * chain.n_w
        }
        PumpState::Bypass => chain.g_w * (chain.g_hemt * (n_in + chain.n_hemt) + chain.n_w),
    })
}

/// Gain and input-referred noise terms of the pumped chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveTerms {
    pub g_eff: f64,
    pub n_pa_eff: f64,
    pub n_hemt_eff: f64,
    /// Warm-stage noise referred to the input; zero when `n_w = 0`.
    pub n_w_eff: f64,
}

impl EffectiveTerms {
    pub fn of(chain: &NoiseChain) -> Self {
        let (l1, l2, g) = (chain.l1, chain.l2, chain.g_pa);
        Self {
            g_eff: chain.g_w * chain.g_hemt * l2 * g * l1,
            n_pa_eff: N_QM * (1.0 - l1) / l1 + chain.n_a / l1,
            n_hemt_eff: N_QM * (1.0 - l2) / (l2 * g * l1) + chain.n_hemt / (l2 * g * l1),
            n_w_eff: chain.n_w / (chain.g_hemt * l2 * g * l1),
        }
    }

    /// Total input-referred system noise.
    pub fn n_sys(&self) -> f64 {
        self.n_pa_eff + self.n_hemt_eff + self.n_w_eff
    }
}

/// Pumped analyzer noise in factored form, `G_eff (N_in + N_sys)`.
pub fn cascade_factored(chain: &NoiseChain, t_source: f64, f: f64) -> Result<f64, NoiseError> {
    let e = EffectiveTerms::of(chain);
    Ok(e.g_eff * (occupation(t_source, f)? + e.n_sys()))
}

/// Input-referred system noise of the pumped chain.
pub fn system_noise(chain: &NoiseChain) -> f64 {
    EffectiveTerms::of(chain).n_sys()
}

/// Device added noise inferred from the system noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AddedNoise {
    pub n_a: f64,
    /// `n_a < 0`: the inputs are mutually inconsistent.
    pub below_vacuum: bool,
}

/// Removes loss and HEMT contributions from `n_sys`.
pub fn added_noise_from(n_sys: f64, l1: f64, l2: f64, g_pa: f64, n_hemt: f64) -> Result<AddedNoise, NoiseError> {
    for (name, v) in [("l1", l1), ("l2", l2)] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(NoiseError::Domain(format!("{name} must lie in (0, 1], got {v}")));
        }
    }
    if !(g_pa > 0.0 && g_pa.is_finite()) {
        return Err(NoiseError::Domain(format!("g_pa must be positive, got {g_pa}")));
    }
    let n_a = l1 * n_sys
        - N_QM * (l2 * g_pa * (1.0 - l1) + (1.0 - l2)) / (l2 * g_pa)
        - n_hemt / (l2 * g_pa);
    Ok(AddedNoise {
        n_a,
        below_vacuum: n_a < 0.0,
    })
}

/// [`added_noise_from`] with losses, gain and HEMT noise taken from `chain`.
pub fn added_noise(n_sys: f64, chain: &NoiseChain) -> Result<AddedNoise, NoiseError> {
    if !(chain.g_pa > 1.0) {
        return Err(NoiseError::Domain(format!(
            "device gain must exceed 1, got {}",
            chain.g_pa
        )));
    }
    added_noise_from(n_sys, chain.l1, chain.l2, chain.g_pa, chain.n_hemt)
}
