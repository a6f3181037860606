use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::FwmError;
use crate::linemodel::{DispersionTable, LookupError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToneMode {
    /// Pump, signal and idler.
    Three,
    /// Adds `3 f_p`, `2 f_p + f_s` and `4 f_p - f_s`.
    Six,
}

impl FromStr for ToneMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "three" | "3" => Ok(Self::Three),
            "six" | "6" => Ok(Self::Six),
            other => Err(format!("unknown tone mode '{other}' (expected three|six)")),
        }
    }
}

impl fmt::Display for ToneMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Three => "three",
            Self::Six => "six",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToneRole {
    Pump,
    Signal,
    Idler,
    Harmonic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    pub label: String,
    pub role: ToneRole,
    pub f: f64,
    /// Wavevector, rad/m. Zero for evanescent tones.
    pub k: f64,
    /// Envelope current amplitude, A.
    pub amp: Complex64,
    /// `(a, b)` with `f = a f_p + b f_s`.
    pub order: (i32, i32),
    pub evanescent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToneSet {
    pub tones: Vec<Tone>,
    pub mode: ToneMode,
    pub warnings: Vec<String>,
}

impl ToneSet {
    pub fn find(&self, role: ToneRole) -> Option<&Tone> {
        self.tones.iter().find(|t| t.role == role)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.tones.iter().position(|t| t.label == label)
    }

    pub fn pump(&self) -> &Tone {
        self.find(ToneRole::Pump).expect("tone sets always carry a pump")
    }

    pub fn signal(&self) -> &Tone {
        self.find(ToneRole::Signal).expect("tone sets always carry a signal")
    }

    pub fn idler(&self) -> &Tone {
        self.find(ToneRole::Idler).expect("tone sets always carry an idler")
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.tones.iter().map(|t| t.f).collect()
    }

    pub fn propagating(&self) -> impl Iterator<Item = &Tone> {
        self.tones.iter().filter(|t| !t.evanescent)
    }

    pub fn set_amp(&mut self, role: ToneRole, amp: Complex64) {
        for t in self.tones.iter_mut().filter(|t| t.role == role) {
            t.amp = amp;
        }
    }

    /// Sum of `|A|^2` over propagating tones.
    pub fn total_power(&self) -> f64 {
        self.propagating().map(|t| t.amp.norm_sqr()).sum()
    }
}

/// Builds the tone set for a pump and signal with all amplitudes zero.
///
/// Pump and signal must propagate. Other tones that fall in a stopband are
/// kept but flagged evanescent, and a warning is recorded.
pub fn build_tone_set(
    f_pump: f64,
    f_signal: f64,
    table: &DispersionTable,
    mode: ToneMode,
) -> Result<ToneSet, FwmError> {
    if !(f_pump > 0.0 && f_signal > 0.0) {
        return Err(FwmError::Invalid(format!(
            "pump and signal frequencies must be positive ({f_pump}, {f_signal})"
        )));
    }
    let mut spec: Vec<(&str, ToneRole, (i32, i32))> = vec![
        ("p", ToneRole::Pump, (1, 0)),
        ("s", ToneRole::Signal, (0, 1)),
        ("i", ToneRole::Idler, (2, -1)),
    ];
    if mode == ToneMode::Six {
        spec.extend([
            ("3p", ToneRole::Harmonic, (3, 0)),
            ("2p+s", ToneRole::Harmonic, (2, 1)),
            ("4p-s", ToneRole::Harmonic, (4, -1)),
        ]);
    }
    let mut tones = Vec::with_capacity(spec.len());
    let mut warnings = Vec::new();
    for (label, role, (a, b)) in spec {
        let f = a as f64 * f_pump + b as f64 * f_signal;
        if !(f > 0.0) {
            return Err(FwmError::Invalid(format!("tone {label} has frequency {f} Hz")));
        }
        if tones.iter().any(|t: &Tone| (t.f - f).abs() < 1.0) {
            return Err(FwmError::Degenerate { f: f_signal });
        }
        let (k, evanescent) = match table.kappa(f) {
            Ok(k) => (k, false),
            Err(LookupError::Evanescent { .. }) => {
                if matches!(role, ToneRole::Pump | ToneRole::Signal) {
                    return Err(FwmError::Evanescent {
                        tone: label.into(),
                        f,
                    });
                }
                warnings.push(format!("{label} tone at {f} Hz is evanescent and not propagated"));
                (0.0, true)
            }
            Err(LookupError::OutOfRange { .. }) => {
                return Err(FwmError::OutOfRange {
                    tone: label.into(),
                    f,
                })
            }
        };
        tones.push(Tone {
            label: label.into(),
            role,
            f,
            k,
            amp: Complex64::new(0.0, 0.0),
            order: (a, b),
            evanescent,
        });
    }
    Ok(ToneSet {
        tones,
        mode,
        warnings,
    })
}
