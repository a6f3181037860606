use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_tone_set, integrate, FwmError, IntegrationOptions, ToneMode, ToneRole};
use crate::constants::{current_from_dbm, linear_to_db, SYSTEM_IMPEDANCE};
use crate::linemodel::{DispersionTable, FilmLine};
use crate::phasematch::PumpConfig;
use crate::trace::{fmt_freq, fmt_value, Trace, TraceState, TraceUnit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainOptions {
    /// Signal input power, dBm.
    pub probe_dbm: f64,
    pub integration: IntegrationOptions,
}

impl Default for GainOptions {
    fn default() -> Self {
        Self {
            probe_dbm: -90.0,
            integration: IntegrationOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Amplified,
    /// The idler falls in a stopband; mixing is inoperative.
    IdlerEvanescent,
    /// The signal itself falls in a stopband.
    SignalEvanescent,
    /// Signal coincides with the pump or a harmonic.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainPoint {
    pub f: f64,
    /// Pumped-over-unpumped signal power ratio, dB.
    pub gain_db: f64,
    /// Idler photons out per signal photon in, dB.
    pub idler_gain_db: Option<f64>,
    pub status: PointStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainCurve {
    pub points: Vec<GainPoint>,
    pub pump: PumpConfig,
    pub mode: ToneMode,
    pub probe_dbm: f64,
}

impl GainCurve {
    pub fn freq(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.f).collect()
    }

    pub fn gain_db(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.gain_db).collect()
    }

    /// Highest gain and its frequency.
    pub fn peak(&self) -> Option<(f64, f64)> {
        self.points
            .iter()
            .max_by(|a, b| a.gain_db.total_cmp(&b.gain_db))
            .map(|p| (p.f, p.gain_db))
    }

    /// Maximal runs of consecutive points with gain above `threshold_db`.
    /// Degenerate points carry no gain value and neither extend nor break a run.
    pub fn regions_above(&self, threshold_db: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut start: Option<f64> = None;
        let mut last = 0.0;
        for p in self.points.iter().filter(|p| p.status != PointStatus::Degenerate) {
            if p.gain_db > threshold_db {
                start.get_or_insert(p.f);
                last = p.f;
            } else if let Some(s) = start.take() {
                out.push((s, last));
            }
        }
        if let Some(s) = start {
            out.push((s, last));
        }
        out
    }

    pub fn to_trace(&self) -> Result<Trace, crate::trace::TraceError> {
        Trace::new(self.freq(), self.gain_db(), TraceUnit::Db, TraceState::PumpOn)
    }

    /// `f_Hz,gain_dB` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "f_Hz,gain_dB")?;
        for p in &self.points {
            writeln!(w, "{},{}", fmt_freq(p.f), fmt_value(p.gain_db))?;
        }
        Ok(())
    }
}

fn skipped(f: f64, status: PointStatus) -> GainPoint {
    GainPoint {
        f,
        gain_db: 0.0,
        idler_gain_db: None,
        status,
    }
}

/// Small-signal gain at one signal frequency.
pub fn signal_gain(
    line: &FilmLine,
    table: &DispersionTable,
    pump: &PumpConfig,
    f_signal: f64,
    mode: ToneMode,
    opts: &GainOptions,
) -> Result<GainPoint, FwmError> {
    let set = match build_tone_set(pump.f_pump, f_signal, table, mode) {
        Ok(s) => s,
        Err(FwmError::Degenerate { .. }) => return Ok(skipped(f_signal, PointStatus::Degenerate)),
        Err(FwmError::Evanescent { tone, .. }) if tone == "s" => {
            return Ok(skipped(f_signal, PointStatus::SignalEvanescent))
        }
        Err(e) => return Err(e),
    };
    if set.idler().evanescent {
        return Ok(skipped(f_signal, PointStatus::IdlerEvanescent));
    }
    let a_s = current_from_dbm(opts.probe_dbm, SYSTEM_IMPEDANCE);
    let mut set = set;
    set.set_amp(ToneRole::Pump, Complex64::new(pump.i_pump, 0.0));
    set.set_amp(ToneRole::Signal, Complex64::new(a_s, 0.0));
    let out = integrate(&set, line, line.total_length, &opts.integration)?;
    let g = out.signal().amp.norm_sqr() / (a_s * a_s);
    let idler = out.idler();
    let gi = (idler.amp.norm_sqr() / idler.f) / (a_s * a_s / f_signal);
    Ok(GainPoint {
        f: f_signal,
        gain_db: linear_to_db(g),
        idler_gain_db: Some(linear_to_db(gi)),
        status: PointStatus::Amplified,
    })
}

/// Signal gain over `freq_grid`; points are computed in parallel.
pub fn gain_curve(
    line: &FilmLine,
    table: &DispersionTable,
    pump: &PumpConfig,
    freq_grid: &[f64],
    mode: ToneMode,
    opts: &GainOptions,
) -> Result<GainCurve, FwmError> {
    pump.validate(table, line.i_star)
        .map_err(|e| FwmError::Invalid(e.to_string()))?;
    let points = freq_grid
        .par_iter()
        .map(|&f| {
            signal_gain(line, table, pump, f, mode, opts).map_err(|e| FwmError::AtPoint {
                f,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GainCurve {
        points,
        pump: *pump,
        mode,
        probe_dbm: opts.probe_dbm,
    })
}
