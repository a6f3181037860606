use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    build_tone_set, integrate, signal_gain, FwmError, GainOptions, PointStatus, ToneMode, ToneRole,
};
use crate::constants::{current_from_dbm, linear_to_db, SYSTEM_IMPEDANCE};
use crate::linemodel::{DispersionTable, FilmLine};
use crate::phasematch::PumpConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionResult {
    pub f_signal: f64,
    pub small_signal_gain_db: f64,
    /// Input power at 1 dB compression, dBm; `None` if the grid never
    /// compresses by 1 dB.
    pub p1db_in: Option<f64>,
    /// `p1db_in + small_signal_gain_db - 1`.
    pub p1db_out: Option<f64>,
    /// `(p_in_dbm, gain_db)` per grid point.
    pub curve: Vec<(f64, f64)>,
}

/// Gain against input power with the pump free to deplete.
///
/// The small-signal reference is the gain at the probe power of `opts`.
pub fn compression_sweep(
    line: &FilmLine,
    table: &DispersionTable,
    pump: &PumpConfig,
    f_signal: f64,
    p_in_grid: &[f64],
    mode: ToneMode,
    opts: &GainOptions,
) -> Result<CompressionResult, FwmError> {
    pump.validate(table, line.i_star)
        .map_err(|e| FwmError::Invalid(e.to_string()))?;
    if p_in_grid.is_empty() || p_in_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(FwmError::Invalid(
            "input power grid must be non-empty and ascending".into(),
        ));
    }
    let small = signal_gain(line, table, pump, f_signal, mode, opts)?;
    if small.status != PointStatus::Amplified || small.gain_db < 10.0 {
        return Err(FwmError::InsufficientGain {
            gain_db: small.gain_db,
        });
    }
    let g0 = small.gain_db;
    let set = build_tone_set(pump.f_pump, f_signal, table, mode)?;
    let curve = p_in_grid
        .par_iter()
        .map(|&p| {
            let a_s = current_from_dbm(p, SYSTEM_IMPEDANCE);
            let mut s = set.clone();
            s.set_amp(ToneRole::Pump, Complex64::new(pump.i_pump, 0.0));
            s.set_amp(ToneRole::Signal, Complex64::new(a_s, 0.0));
            let out = integrate(&s, line, line.total_length, &opts.integration).map_err(|e| {
                FwmError::AtPower {
                    p_dbm: p,
                    source: Box::new(e),
                }
            })?;
            Ok((p, linear_to_db(out.signal().amp.norm_sqr() / (a_s * a_s))))
        })
        .collect::<Result<Vec<_>, FwmError>>()?;

    let target = g0 - 1.0;
    let mut p1db_in = None;
    for (j, &(p, g)) in curve.iter().enumerate() {
        if g <= target {
            p1db_in = Some(if j == 0 {
                p
            } else {
                let (p0, g_prev) = curve[j - 1];
                p0 + (target - g_prev) * (p - p0) / (g - g_prev)
            });
            break;
        }
    }
    Ok(CompressionResult {
        f_signal,
        small_signal_gain_db: g0,
        p1db_in,
        p1db_out: p1db_in.map(|p| p + g0 - 1.0),
        curve,
    })
}
