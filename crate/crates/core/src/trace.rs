//! Frequency-indexed curves and their CSV form (`freq_hz,value,unit,state`).

use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TRACE_HEADER: &str = "freq_hz,value,unit,state";

/// Frequencies are written as integer Hz.
pub fn fmt_freq(f: f64) -> String {
    format!("{:.0}", f.round())
}

/// Values are written with 9 significant digits.
pub fn fmt_value(v: f64) -> String {
    format!("{v:.8e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TraceUnit {
    #[serde(rename = "dB")]
    Db,
    #[serde(rename = "quanta")]
    Quanta,
    #[serde(rename = "kelvin")]
    Kelvin,
    #[serde(rename = "linear")]
    Linear,
}

impl TraceUnit {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Db => "dB",
            Self::Quanta => "quanta",
            Self::Kelvin => "kelvin",
            Self::Linear => "linear",
        }
    }
}

impl fmt::Display for TraceUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TraceUnit {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dB" | "db" => Ok(Self::Db),
            "quanta" => Ok(Self::Quanta),
            "kelvin" | "K" => Ok(Self::Kelvin),
            "linear" => Ok(Self::Linear),
            other => Err(format!("unknown unit '{other}'")),
        }
    }
}

/// Measurement condition a trace was taken (or computed) under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceState {
    Hot,
    Cold,
    PumpOn,
    PumpOff,
    Bypass,
    /// Computed from other traces.
    Derived,
}

impl TraceState {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Hot => "hot",
            Self::Cold => "cold",
            Self::PumpOn => "pump_on",
            Self::PumpOff => "pump_off",
            Self::Bypass => "bypass",
            Self::Derived => "derived",
        }
    }
}

impl fmt::Display for TraceState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TraceState {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "hot" => Ok(Self::Hot),
            "cold" => Ok(Self::Cold),
            "pump_on" => Ok(Self::PumpOn),
            "pump_off" => Ok(Self::PumpOff),
            "bypass" => Ok(Self::Bypass),
            "derived" => Ok(Self::Derived),
            other => Err(format!("unknown state '{other}'")),
        }
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: frequency {f} Hz is not above the previous point")]
    NotAscending { line: usize, f: f64 },
    #[error("line {line}: non-finite value")]
    NonFinite { line: usize },
    #[error("line {line}: expected unit {expected}, found {found}")]
    UnitMismatch {
        line: usize,
        expected: TraceUnit,
        found: TraceUnit,
    },
    #[error("trace has no data rows")]
    Empty,
    #[error("frequency and value columns differ in length ({0} vs {1})")]
    Length(usize, usize),
    #[error("traces are on different frequency grids")]
    GridMismatch,
    #[error("invalid trace: {0}")]
    Invalid(String),
}

/// A frequency-indexed curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub freq: Vec<f64>,
    pub values: Vec<f64>,
    pub unit: TraceUnit,
    pub state: TraceState,
}

impl Trace {
    /// Builds a trace, checking the grid is strictly ascending and all
    /// numbers are finite.
    pub fn new(
        freq: Vec<f64>,
        values: Vec<f64>,
        unit: TraceUnit,
        state: TraceState,
    ) -> Result<Self, TraceError> {
        if freq.len() != values.len() {
            return Err(TraceError::Length(freq.len(), values.len()));
        }
        if freq.is_empty() {
            return Err(TraceError::Empty);
        }
        for (i, (&f, &v)) in freq.iter().zip(&values).enumerate() {
            if !f.is_finite() || !v.is_finite() {
                return Err(TraceError::NonFinite { line: i + 2 });
            }
            if i > 0 && !(f > freq[i - 1]) {
                return Err(TraceError::NotAscending { line: i + 2, f });
            }
        }
        Ok(Self {
            freq,
            values,
            unit,
            state,
        })
    }

    pub fn len(&self) -> usize {
        self.freq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freq.is_empty()
    }

    pub fn same_grid(&self, other: &Trace) -> bool {
        self.freq == other.freq
    }

    /// Applies `f` to every value, keeping the grid.
    pub fn map(&self, unit: TraceUnit, state: TraceState, f: impl Fn(f64, f64) -> f64) -> Trace {
        Trace {
            freq: self.freq.clone(),
            values: self.freq.iter().zip(&self.values).map(|(&x, &v)| f(x, v)).collect(),
            unit,
            state,
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{TRACE_HEADER}")?;
        for (&f, &v) in self.freq.iter().zip(&self.values) {
            writeln!(w, "{},{},{},{}", fmt_freq(f), fmt_value(v), self.unit, self.state)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is ascii")
    }

    /// Parses a trace CSV. With `expected_unit` set, every row must carry it.
    pub fn read_csv<R: BufRead>(r: R, expected_unit: Option<TraceUnit>) -> Result<Trace, TraceError> {
        let mut lines = r.lines();
        let header = match lines.next() {
            Some(h) => h?,
            None => return Err(TraceError::Empty),
        };
        if header.trim().trim_start_matches('\u{feff}') != TRACE_HEADER {
            return Err(TraceError::Parse {
                line: 1,
                msg: format!("expected header '{TRACE_HEADER}', found '{}'", header.trim()),
            });
        }
        let mut freq = Vec::new();
        let mut values = Vec::new();
        let mut unit = expected_unit;
        let mut state = None;
        for (idx, line) in lines.enumerate() {
            let lineno = idx + 2;
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| TraceError::Parse { line: lineno, msg };
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 4 {
                return Err(parse_err(format!("expected 4 columns, found {}", cols.len())));
            }
            let f: f64 = cols[0]
                .parse()
                .map_err(|_| parse_err(format!("bad frequency '{}'", cols[0])))?;
            let v: f64 = cols[1]
                .parse()
                .map_err(|_| parse_err(format!("bad value '{}'", cols[1])))?;
            let u: TraceUnit = cols[2].parse().map_err(parse_err)?;
            let s: TraceState = cols[3].parse().map_err(parse_err)?;
            if !f.is_finite() || !v.is_finite() {
                return Err(TraceError::NonFinite { line: lineno });
            }
            match unit {
                Some(expected) if expected != u => {
                    return Err(TraceError::UnitMismatch {
                        line: lineno,
                        expected,
                        found: u,
                    })
                }
                _ => unit = Some(u),
            }
            match state {
                Some(st) if st != s => {
                    return Err(parse_err(format!("state changes from {st} to {s}")))
                }
                _ => state = Some(s),
            }
            if let Some(&prev) = freq.last() {
                if !(f > prev) {
                    return Err(TraceError::NotAscending { line: lineno, f });
                }
            }
            freq.push(f);
            values.push(v);
        }
        match (unit, state) {
            (Some(unit), Some(state)) if !freq.is_empty() => Ok(Trace {
                freq,
                values,
                unit,
                state,
            }),
            _ => Err(TraceError::Empty),
        }
    }

    pub fn read_path(path: &Path, expected_unit: Option<TraceUnit>) -> Result<Trace, TraceError> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(io::BufReader::new(file), expected_unit)
    }

    pub fn write_path(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.to_csv_string())
    }
}
