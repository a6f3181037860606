//! Four-wave-mixing phase matching and gain-band prediction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{current_from_dbm, SYSTEM_IMPEDANCE};
use crate::linemodel::{DispersionTable, LookupError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhaseMatchError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{tone} tone at {f} Hz is evanescent (stopband {low}..{high} Hz)")]
    Evanescent {
        tone: &'static str,
        f: f64,
        low: f64,
        high: f64,
    },
    #[error("{tone} tone at {f} Hz is outside the dispersion table")]
    OutOfRange { tone: &'static str, f: f64 },
    #[error("invalid pump: {0}")]
    InvalidPump(String),
}

impl PhaseMatchError {
    fn lookup(tone: &'static str, e: LookupError) -> Self {
        match e {
            LookupError::Evanescent { f, low, high } => Self::Evanescent { tone, f, low, high },
            LookupError::OutOfRange { f, .. } => Self::OutOfRange { tone, f },
        }
    }
}

/// Pump tone. `i_pump` is the RMS current on the line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpConfig {
    pub f_pump: f64,
    pub i_pump: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_pump_dbm: Option<f64>,
}

impl PumpConfig {
    pub fn new(f_pump: f64, i_pump: f64) -> Self {
        Self {
            f_pump,
            i_pump,
            p_pump_dbm: None,
        }
    }

    /// Pump given as power, converted with `i = sqrt(P / 50 ohm)`.
    pub fn from_dbm(f_pump: f64, p_pump_dbm: f64) -> Self {
        Self {
            f_pump,
            i_pump: current_from_dbm(p_pump_dbm, SYSTEM_IMPEDANCE),
            p_pump_dbm: Some(p_pump_dbm),
        }
    }

    pub fn with_current(self, i_pump: f64) -> Self {
        Self {
            i_pump,
            p_pump_dbm: None,
            ..self
        }
    }

    pub fn with_frequency(self, f_pump: f64) -> Self {
        Self { f_pump, ..self }
    }

    /// `0 <= i_pump < i_star` and the pump propagates.
    pub fn validate(&self, table: &DispersionTable, i_star: f64) -> Result<(), PhaseMatchError> {
        if !(self.f_pump.is_finite() && self.f_pump > 0.0) {
            return Err(PhaseMatchError::InvalidPump(format!(
                "f_pump must be positive, got {}",
                self.f_pump
            )));
        }
        if !(self.i_pump.is_finite() && self.i_pump >= 0.0 && self.i_pump < i_star) {
            return Err(PhaseMatchError::InvalidPump(format!(
                "i_pump must lie in [0, i_star = {i_star}), got {}",
                self.i_pump
            )));
        }
        table
            .kappa(self.f_pump)
            .map(|_| ())
            .map_err(|e| PhaseMatchError::lookup("pump", e))
    }
}

/// `2 f_pump - f_signal`.
pub fn idler_freq(f_pump: f64, f_signal: f64) -> Result<f64, PhaseMatchError> {
    if !(f_signal > 0.0) {
        return Err(PhaseMatchError::Domain(format!(
            "signal frequency must be positive, got {f_signal}"
        )));
    }
    let fi = 2.0 * f_pump - f_signal;
    if !(fi > 0.0) {
        return Err(PhaseMatchError::Domain(format!(
            "idler frequency 2*{f_pump} - {f_signal} is not positive"
        )));
    }
    Ok(fi)
}

fn kappa(table: &DispersionTable, tone: &'static str, f: f64) -> Result<f64, PhaseMatchError> {
    table.kappa(f).map_err(|e| PhaseMatchError::lookup(tone, e))
}

/// Linear phase mismatch `k_s + k_i - 2 k_p`, rad/m.
pub fn delta_beta(table: &DispersionTable, f_signal: f64, f_pump: f64) -> Result<f64, PhaseMatchError> {
    let fi = idler_freq(f_pump, f_signal)?;
    let kp = kappa(table, "pump", f_pump)?;
    if f_signal == f_pump {
        return Ok(0.0);
    }
    let ks = kappa(table, "signal", f_signal)?;
    let ki = kappa(table, "idler", fi)?;
    Ok(ks + ki - 2.0 * kp)
}

/// Pump-induced nonlinear mismatch `k_p i_p^2 / (4 i_star^2)`, rad/m.
pub fn nonlinear_term(kappa_p: f64, i_pump: f64, i_star: f64) -> f64 {
    let r = i_pump / i_star;
    kappa_p * r * r / 4.0
}

/// `delta_beta + k_p i_p^2 / (4 i_star^2)`; zero at phase-matched signals.
pub fn matching_residual(
    table: &DispersionTable,
    f_signal: f64,
    pump: &PumpConfig,
    i_star: f64,
) -> Result<f64, PhaseMatchError> {
    let db = delta_beta(table, f_signal, pump.f_pump)?;
    let kp = kappa(table, "pump", pump.f_pump)?;
    Ok(db + nonlinear_term(kp, pump.i_pump, i_star))
}

/// Predicted gain bands. Frequencies in Hz; `None` where a band is absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandPrediction {
    pub pump: PumpConfig,
    pub i_star: f64,
    /// `k_p i_p^2 / (4 i_star^2)`, rad/m.
    pub nonlinear_term: f64,
    /// Signal-side region of exponential gain, `|residual| < nonlinear_term`.
    pub signal_band: Option<(f64, f64)>,
    /// Mirror of `signal_band` through the pump.
    pub idler_band: Option<(f64, f64)>,
    /// Signal frequency whose idler sits at the centre of the first stopband
    /// above the pump.
    pub idler_gap_freq: Option<f64>,
    /// Region around the pump where `delta_beta <= nonlinear_term`.
    pub around_pump_band: Option<(f64, f64)>,
    /// Zeros of the matching residual below the pump.
    pub phase_matched: Vec<f64>,
}

const SCAN_STEP: f64 = 1e6;
const ROOT_TOL: f64 = 1e3;

/// Scans signal frequencies below the pump on a 1 MHz grid and refines
/// every band edge and residual zero by bisection to 1 kHz.
pub fn predict_bands(
    table: &DispersionTable,
    pump: &PumpConfig,
    i_star: f64,
) -> Result<BandPrediction, PhaseMatchError> {
    pump.validate(table, i_star)?;
    let fp = pump.f_pump;
    let kp = kappa(table, "pump", fp)?;
    let nl = nonlinear_term(kp, pump.i_pump, i_star);

    let f_max = *table.freq.last().unwrap();
    let f_min = table.freq[0].max(2.0 * fp - f_max);
    let n = ((fp - f_min) / SCAN_STEP).floor() as usize;
    let scan: Vec<f64> = (0..n).map(|j| fp - (n - j) as f64 * SCAN_STEP).collect();
    let residual = |f: f64| matching_residual(table, f, pump, i_star).ok();
    let r: Vec<Option<f64>> = scan.par_iter().map(|&f| residual(f)).collect();

    let exp_gain = |f: f64| residual(f).is_some_and(|r| r.abs() < nl);
    let near_pump = |f: f64| residual(f).is_some_and(|r| r <= 2.0 * nl);

    // Residual zeros.
    let mut phase_matched = Vec::new();
    for j in 1..scan.len() {
        if let (Some(a), Some(b)) = (r[j - 1], r[j]) {
            if a == 0.0 {
                phase_matched.push(scan[j - 1]);
            } else if a.signum() != b.signum() && b != 0.0 {
                let pos = |f: f64| residual(f).is_some_and(|v| (v > 0.0) == (a > 0.0));
                phase_matched.push(bisect(&pos, scan[j - 1], scan[j]));
            }
        }
    }

    let idler_gap_freq = table
        .first_stopband_above(fp)
        .map(|(lo, hi)| 2.0 * fp - 0.5 * (lo + hi));

    // Around-pump band: walk down from the pump while the condition holds.
    let around_pump_band = if nl > 0.0 {
        let mut j = scan.len();
        while j > 0 && r[j - 1].is_some_and(|v| v <= 2.0 * nl) {
            j -= 1;
        }
        if j == scan.len() {
            None
        } else {
            let lo = if j == 0 {
                scan[0]
            } else {
                bisect(&near_pump, scan[j], scan[j - 1])
            };
            Some((lo, 2.0 * fp - lo))
        }
    } else {
        None
    };

    // Exponential-gain runs on the scan grid, excluding the run attached to
    // the pump.
    let pump_run_start = around_pump_band.map_or(fp, |b| b.0);
    let mut runs: Vec<(f64, f64)> = Vec::new();
    let mut j = 0;
    while j < scan.len() {
        if !r[j].is_some_and(|v| v.abs() < nl) || scan[j] >= pump_run_start {
            j += 1;
            continue;
        }
        let start = j;
        while j < scan.len() && r[j].is_some_and(|v| v.abs() < nl) && scan[j] < pump_run_start {
            j += 1;
        }
        let lo = if start == 0 {
            scan[0]
        } else {
            bisect(&exp_gain, scan[start], scan[start - 1])
        };
        let hi = if j == scan.len() {
            scan[j - 1]
        } else {
            bisect(&exp_gain, scan[j - 1], scan[j])
        };
        runs.push((lo, hi));
    }
    let signal_band = runs
        .into_iter()
        .filter(|&(_, hi)| idler_gap_freq.is_none_or(|g| hi < g))
        .max_by(|a, b| (a.1 - a.0).total_cmp(&(b.1 - b.0)));
    let idler_band = signal_band.map(|(lo, hi)| (2.0 * fp - hi, 2.0 * fp - lo));

    Ok(BandPrediction {
        pump: *pump,
        i_star,
        nonlinear_term: nl,
        signal_band,
        idler_band,
        idler_gap_freq,
        around_pump_band,
        phase_matched,
    })
}

/// Bisects between a point where `inside` holds and one where it does not,
/// returning the last inside point found once the bracket is below 1 kHz.
fn bisect<F: Fn(f64) -> bool>(inside: &F, mut yes: f64, mut no: f64) -> f64 {
    while (no - yes).abs() > ROOT_TOL {
        let mid = 0.5 * (yes + no);
        if inside(mid) {
            yes = mid;
        } else {
            no = mid;
        }
    }
    yes
}
