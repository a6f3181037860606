use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::FwmError;
use crate::trace::{Trace, TraceState, TraceUnit};

/// Denominator of the multipath transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RippleConvention {
    /// `1 - r^2 g exp(-ikL)`.
    #[default]
    Printed,
    /// `1 - r^2 g^2 exp(-2ikL)`: one full round trip between the ends.
    RoundTrip,
}

impl FromStr for RippleConvention {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "printed" | "as_printed" => Ok(Self::Printed),
            "roundtrip" | "round_trip" => Ok(Self::RoundTrip),
            other => Err(format!(
                "unknown ripple convention '{other}' (expected printed|roundtrip)"
            )),
        }
    }
}

impl fmt::Display for RippleConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Printed => "printed",
            Self::RoundTrip => "roundtrip",
        })
    }
}

/// Line with partially reflecting ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RippleModel {
    /// Reflection amplitude at each end.
    pub r: f64,
    /// Transmission amplitude at each end.
    pub t: f64,
    /// One-way amplitude gain.
    pub g: f64,
    /// Phase velocity, m/s; `k = 2 pi f / v_phase`.
    pub v_phase: f64,
    pub length: f64,
}

impl RippleModel {
    /// Lossless ends: `t = sqrt(1 - r^2)`.
    pub fn lossless(r: f64, g: f64, v_phase: f64, length: f64) -> Self {
        Self {
            r,
            t: (1.0 - r * r).max(0.0).sqrt(),
            g,
            v_phase,
            length,
        }
    }

    pub fn loop_gain(&self, convention: RippleConvention) -> f64 {
        match convention {
            RippleConvention::Printed => self.r * self.r * self.g,
            RippleConvention::RoundTrip => self.r * self.r * self.g * self.g,
        }
    }

    pub fn validate(&self, convention: RippleConvention) -> Result<(), FwmError> {
        if !(self.r >= 0.0 && self.r < 1.0) {
            return Err(FwmError::Invalid(format!("r must lie in [0, 1), got {}", self.r)));
        }
        if !(self.t >= 0.0 && self.r * self.r + self.t * self.t <= 1.0 + 1e-12) {
            return Err(FwmError::Invalid(format!(
                "r^2 + t^2 must not exceed 1 (r = {}, t = {})",
                self.r, self.t
            )));
        }
        if !(self.g > 0.0 && self.v_phase > 0.0 && self.length > 0.0) {
            return Err(FwmError::Invalid(
                "g, v_phase and length must be positive".into(),
            ));
        }
        let loop_gain = self.loop_gain(convention);
        // A few ulps of slack so that g = 1 / r^2 computed in floating point
        // still counts as the threshold.
        if loop_gain >= 1.0 - 4.0 * f64::EPSILON {
            return Err(FwmError::Oscillation { loop_gain });
        }
        Ok(())
    }

    /// Complex transmission at `f`.
    pub fn s21(&self, f: f64, convention: RippleConvention) -> Complex64 {
        let kl = 2.0 * PI * f / self.v_phase * self.length;
        let forward = Complex64::cis(-kl) * (self.t * self.t * self.g);
        let denom = match convention {
            RippleConvention::Printed => {
                Complex64::new(1.0, 0.0) - Complex64::cis(-kl) * (self.r * self.r * self.g)
            }
            RippleConvention::RoundTrip => {
                Complex64::new(1.0, 0.0)
                    - Complex64::cis(-2.0 * kl) * (self.r * self.r * self.g * self.g)
            }
        };
        forward / denom
    }

    /// Frequency spacing of the transmission maxima.
    pub fn ripple_spacing(&self, convention: RippleConvention) -> f64 {
        match convention {
            RippleConvention::Printed => self.v_phase / self.length,
            RippleConvention::RoundTrip => self.v_phase / (2.0 * self.length),
        }
    }
}

/// `|S21|` in dB over `freq_grid`.
pub fn ripple_s21(
    model: &RippleModel,
    freq_grid: &[f64],
    convention: RippleConvention,
) -> Result<Trace, FwmError> {
    model.validate(convention)?;
    let values = freq_grid
        .iter()
        .map(|&f| 20.0 * model.s21(f, convention).norm().log10())
        .collect();
    Trace::new(freq_grid.to_vec(), values, TraceUnit::Db, TraceState::Derived)
        .map_err(|e| FwmError::Invalid(e.to_string()))
}

/// Mean spacing between interior local maxima of a trace, Hz.
pub fn ripple_period(trace: &Trace) -> Option<f64> {
    let v = &trace.values;
    let peaks: Vec<f64> = (1..v.len().saturating_sub(1))
        .filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1])
        .map(|i| trace.freq[i])
        .collect();
    if peaks.len() < 2 {
        return None;
    }
    Some((peaks[peaks.len() - 1] - peaks[0]) / (peaks.len() - 1) as f64)
}
