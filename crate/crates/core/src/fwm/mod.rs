//! Coupled-mode equations for degenerate four-wave mixing along the line:
//! tone sets, the mixing-term engine, an adaptive integrator and the gain,
//! compression and ripple drivers built on them.

mod cme;
mod compression;
mod gain;
mod ode;
mod ripple;
mod tones;

pub use cme::{cme_rhs, CmeSystem, MixingTerm};
pub use compression::{compression_sweep, CompressionResult};
pub use gain::{gain_curve, signal_gain, GainCurve, GainOptions, GainPoint, PointStatus};
pub use ode::{integrate, integrate_observed, IntegrationOptions};
pub use ripple::{ripple_period, ripple_s21, RippleConvention, RippleModel};
pub use tones::{build_tone_set, Tone, ToneMode, ToneRole, ToneSet};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FwmError {
    #[error("signal at {f} Hz coincides with another tone")]
    Degenerate { f: f64 },
    #[error("{tone} tone at {f} Hz is evanescent")]
    Evanescent { tone: String, f: f64 },
    #[error("{tone} tone at {f} Hz is outside the dispersion table")]
    OutOfRange { tone: String, f: f64 },
    #[error("step size underflow at z = {z} m (h = {h:e} m, error ratio {err:.3e})")]
    Stiff { z: f64, h: f64, err: f64 },
    #[error("integration exceeded {0} steps")]
    TooManySteps(usize),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("small-signal gain {gain_db:.2} dB is below the 10 dB needed for compression")]
    InsufficientGain { gain_db: f64 },
    #[error("at {f} Hz: {source}")]
    AtPoint { f: f64, source: Box<FwmError> },
    #[error("at input power {p_dbm} dBm: {source}")]
    AtPower { p_dbm: f64, source: Box<FwmError> },
    #[error("reflection loop diverges: loop gain {loop_gain} >= 1")]
    Oscillation { loop_gain: f64 },
}
