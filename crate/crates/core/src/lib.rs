//! Simulation and calibration models for kinetic-inductance traveling-wave
//! parametric amplifiers (KI-TWPAs).
//!
//! The crate is organized around four subsystems:
//!
//! * [`linemodel`]: the stub-loaded transmission line, its chain-matrix
//!   network model, Floquet-Bloch dispersion and stopbands, loaded-line
//!   calibration and the current dependence of the kinetic inductance.
//! * [`phasematch`]: the four-wave-mixing phase-matching residual and band
//!   predictions derived from a dispersion table.
//! * [`fwm`]: coupled-mode equations for degenerate four-wave mixing,
//!   integrated along the line to produce gain, compression and ripple.
//! * [`noisecal`]: Y-factor and cascaded-noise calibration used to extract
//!   the amplifier-added noise from hot/cold measurements.
//!
//! Physical quantities are plain `f64` in SI units (Hz, m, A, H/m, F/m, K)
//! unless a name says otherwise (`_dbm`, `_db`).

pub mod constants;
pub mod fwm;
pub mod grid;
pub mod interp;
pub mod linemodel;
pub mod noisecal;
pub mod phasematch;
pub mod presets;
pub mod trace;

pub use fwm::{
    build_tone_set, compression_sweep, gain_curve, integrate, ripple_s21, CompressionResult,
    GainCurve, GainOptions, GainPoint, IntegrationOptions, RippleConvention, RippleModel, ToneMode, ToneSet,
};
pub use grid::FrequencyGrid;
pub use linemodel::{
    calibrate_loaded_line, fit_istar, lk_of_current, supercell_bloch, telegrapher_params,
    unit_cell_matrix, DispersionTable, FilmLine, IstarFit, StubPattern, TwoPortMatrix,
};
pub use noisecal::{NoiseChain, PumpState};
pub use phasematch::{predict_bands, BandPrediction, PumpConfig};
pub use presets::Preset;
pub use trace::{Trace, TraceState, TraceUnit};
