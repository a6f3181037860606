//! TOML run configuration. Every section is optional; missing values fall
//! back to the selected preset or to documented defaults.

use std::path::{Path, PathBuf};

use kitwpa_core::linemodel::{calibrate_loaded_line, LineError};
use kitwpa_core::noisecal::NoiseChain;
use kitwpa_core::presets::NBTIN_4TO8;
use kitwpa_core::{FilmLine, FrequencyGrid, Preset, PumpConfig, StubPattern};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub device: DeviceSection,
    #[serde(default)]
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub pump: PumpSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub compress: CompressSection,
    #[serde(default)]
    pub ripple: RippleSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub istar: IstarSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    pub preset: Option<String>,
    pub l_per_m: Option<f64>,
    pub c_per_m: Option<f64>,
    pub i_star: Option<f64>,
    pub length: Option<f64>,
    pub z_target: Option<f64>,
    /// Fraction of c.
    pub v_target: Option<f64>,
    /// When present this table replaces the preset pattern; an empty table
    /// means an unloaded line.
    pub pattern: Option<PatternSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternSection {
    pub pitch: Option<f64>,
    pub stub_avg: Option<f64>,
    pub stub_mod: Option<f64>,
    pub mod_period: Option<f64>,
    pub stub_z0: Option<f64>,
    pub stub_vph: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpSection {
    pub f_pump: Option<f64>,
    pub i_pump: Option<f64>,
    /// `i_pump / i_star`.
    pub ratio: Option<f64>,
    pub p_dbm: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
    pub probe_dbm: Option<f64>,
    pub pump_sweep: Option<Vec<f64>>,
    pub mode: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompressSection {
    pub f_signal: Option<f64>,
    pub p_start: Option<f64>,
    pub p_stop: Option<f64>,
    pub p_step: Option<f64>,
    pub pump_dbm: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RippleSection {
    pub r: Option<f64>,
    pub gain_db: Option<f64>,
    pub length: Option<f64>,
    /// Fraction of c; defaults to the low-frequency Bloch velocity.
    pub v_phase: Option<f64>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub step: Option<f64>,
    pub convention: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub t_hot: Option<f64>,
    pub t_cold: Option<f64>,
    /// HEMT noise in quanta, used when `files.hemt` is absent.
    pub n_hemt: Option<f64>,
    pub smooth: Option<usize>,
    #[serde(default)]
    pub chain: ChainSection,
    #[serde(default)]
    pub synth: SynthSection,
    #[serde(default)]
    pub files: NoiseFiles,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub loss_db: Option<f64>,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub g_pa_db: Option<f64>,
    pub n_a: Option<f64>,
    pub g_hemt_db: Option<f64>,
    pub n_hemt: Option<f64>,
    pub g_w_db: Option<f64>,
    pub n_w: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
    pub seed: Option<u64>,
    pub noise_rel: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseFiles {
    pub hot: Option<PathBuf>,
    pub cold: Option<PathBuf>,
    pub pump_off: Option<PathBuf>,
    pub bypass: Option<PathBuf>,
    pub gain: Option<PathBuf>,
    pub hemt: Option<PathBuf>,
    pub hot_off: Option<PathBuf>,
    pub cold_off: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IstarSection {
    /// `[i_dc_A, f_center_Hz]` pairs.
    pub points: Option<Vec<[f64; 2]>>,
    /// CSV with header `i_A,f_Hz`.
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

/// Field-level validation failures, all collected before anything runs.
#[derive(Debug, Default)]
pub struct Problems(pub Vec<String>);

impl Problems {
    pub fn push(&mut self, field: &str, msg: impl std::fmt::Display) {
        self.0.push(format!("{field}: {msg}"));
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn positive(&mut self, field: &str, v: Option<f64>) {
        if let Some(x) = v {
            if !(x.is_finite() && x > 0.0) {
                self.push(field, format!("must be positive, got {x}"));
            }
        }
    }

    fn finite(&mut self, field: &str, v: Option<f64>) {
        if let Some(x) = v {
            if !x.is_finite() {
                self.push(field, format!("must be finite, got {x}"));
            }
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Rewrites relative input paths against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(x) = p {
                if x.is_relative() {
                    *x = base.join(&*x);
                }
            }
        };
        let f = &mut self.noise.files;
        for p in [
            &mut f.hot,
            &mut f.cold,
            &mut f.pump_off,
            &mut f.bypass,
            &mut f.gain,
            &mut f.hemt,
            &mut f.hot_off,
            &mut f.cold_off,
        ] {
            fix(p);
        }
        fix(&mut self.istar.file);
    }

    pub fn preset_name(&self) -> &str {
        self.device.preset.as_deref().unwrap_or(NBTIN_4TO8)
    }

    /// Checks value ranges common to every command.
    pub fn validate_common(&self, p: &mut Problems) {
        if Preset::by_name(self.preset_name()).is_none() {
            p.push(
                "device.preset",
                format!(
                    "unknown preset '{}' (known: {})",
                    self.preset_name(),
                    Preset::names().join(", ")
                ),
            );
        }
        let d = &self.device;
        for (k, v) in [
            ("device.l_per_m", d.l_per_m),
            ("device.c_per_m", d.c_per_m),
            ("device.i_star", d.i_star),
            ("device.length", d.length),
            ("device.z_target", d.z_target),
            ("device.v_target", d.v_target),
        ] {
            p.positive(k, v);
        }
        if let Some(pat) = &d.pattern {
            let any = pat.pitch.is_some()
                || pat.stub_avg.is_some()
                || pat.stub_mod.is_some()
                || pat.mod_period.is_some();
            if any && pat.pitch.is_none() {
                p.push("device.pattern.pitch", "required when the pattern is not empty");
            }
            p.positive("device.pattern.pitch", pat.pitch);
            p.positive("device.pattern.mod_period", pat.mod_period);
            p.positive("device.pattern.stub_z0", pat.stub_z0);
            p.positive("device.pattern.stub_vph", pat.stub_vph);
            for (k, v) in [("device.pattern.stub_avg", pat.stub_avg), ("device.pattern.stub_mod", pat.stub_mod)] {
                if let Some(x) = v {
                    if !(x.is_finite() && x >= 0.0) {
                        p.push(k, format!("must be >= 0, got {x}"));
                    }
                }
            }
        }
        if let Some(g) = &self.grid {
            if !FrequencyGrid::new(g.start, g.stop, g.step).is_valid() {
                p.push("grid", "need 0 < start <= stop and step > 0");
            }
        }
        let pump = &self.pump;
        p.positive("pump.f_pump", pump.f_pump);
        p.finite("pump.p_dbm", pump.p_dbm);
        if let Some(i) = pump.i_pump {
            let i_star = d
                .i_star
                .or_else(|| Preset::by_name(self.preset_name()).map(|b| b.line.i_star))
                .unwrap_or(f64::INFINITY);
            if !(i.is_finite() && i >= 0.0 && i < i_star) {
                p.push("pump.i_pump", format!("must lie in [0, i_star = {i_star}), got {i}"));
            }
        }
        if let Some(r) = pump.ratio {
            if !(r.is_finite() && (0.0..1.0).contains(&r)) {
                p.push("pump.ratio", format!("must lie in [0, 1), got {r}"));
            }
        }
        let set = [pump.i_pump.is_some(), pump.ratio.is_some(), pump.p_dbm.is_some()]
            .iter()
            .filter(|b| **b)
            .count();
        if set > 1 {
            p.push("pump", "give at most one of i_pump, ratio, p_dbm");
        }
    }

    /// Film line, pattern and pump after applying overrides and calibration.
    pub fn device(&self) -> Result<Device, LineError> {
        let base = Preset::by_name(self.preset_name()).expect("validated preset");
        let d = &self.device;
        let mut line = FilmLine::new(
            d.l_per_m.unwrap_or(base.line.l_per_m),
            d.c_per_m.unwrap_or(base.line.c_per_m),
            d.i_star.unwrap_or(base.line.i_star),
            d.length.unwrap_or(base.line.total_length),
        )
        .with_self_targets()?;
        if let Some(z) = d.z_target {
            line.z_target = Some(z);
        }
        if let Some(v) = d.v_target {
            line.v_target = Some(v);
        }
        let pattern = match &d.pattern {
            None => base.pattern,
            Some(p) if p.pitch.is_none() => StubPattern::unloaded(base.pattern.cell_pitch),
            Some(p) => {
                let pitch = p.pitch.unwrap();
                let mut s = StubPattern::new(
                    pitch,
                    p.stub_avg.unwrap_or(0.0),
                    p.stub_mod.unwrap_or(0.0),
                    p.mod_period.unwrap_or(2.0 * pitch),
                );
                s.stub_z0 = p.stub_z0;
                s.stub_vph = p.stub_vph;
                s
            }
        };
        let line = calibrate_loaded_line(&line, &pattern)?;
        let f_pump = self.pump.f_pump.unwrap_or(base.pump.f_pump);
        let pump = if let Some(dbm) = self.pump.p_dbm {
            PumpConfig::from_dbm(f_pump, dbm)
        } else if let Some(i) = self.pump.i_pump {
            PumpConfig::new(f_pump, i)
        } else {
            let ratio = self.pump.ratio.unwrap_or(base.pump.i_pump / base.line.i_star);
            PumpConfig::new(f_pump, ratio * line.i_star)
        };
        Ok(Device {
            preset: base.name,
            line,
            pattern,
            pump,
        })
    }

    pub fn dispersion_grid(&self) -> FrequencyGrid {
        self.grid
            .map(|g| FrequencyGrid::new(g.start, g.stop, g.step))
            .unwrap_or_else(FrequencyGrid::default_dispersion)
    }

    /// Noise chain from `[noise.chain]` and the load temperatures.
    pub fn chain(&self) -> NoiseChain {
        let c = &self.noise.chain;
        let db = |x: f64| 10f64.powf(x / 10.0);
        let side = c.loss_db.map(|l| db(-l)).unwrap_or(1.0);
        NoiseChain {
            l1: c.l1.unwrap_or(side),
            l2: c.l2.unwrap_or(side),
            g_pa: db(c.g_pa_db.unwrap_or(15.0)),
            n_a: c.n_a.unwrap_or(0.7),
            g_hemt: db(c.g_hemt_db.unwrap_or(38.0)),
            n_hemt: c.n_hemt.or(self.noise.n_hemt).unwrap_or(13.0),
            g_w: db(c.g_w_db.unwrap_or(0.0)),
            n_w: c.n_w.unwrap_or(0.0),
            t_hot: self.noise.t_hot.unwrap_or(3.18),
            t_cold: self.noise.t_cold.unwrap_or(0.020),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Device {
    pub preset: String,
    pub line: FilmLine,
    pub pattern: StubPattern,
    pub pump: PumpConfig,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_preset() {
        let c = RunConfig::parse("").unwrap();
        let mut p = Problems::default();
        c.validate_common(&mut p);
        assert!(p.is_empty());
        let d = c.device().unwrap();
        let preset = Preset::nbtin_4to8();
        assert_eq!(d.pattern, preset.pattern);
        assert!((d.pump.i_pump - preset.pump.i_pump).abs() < 1e-15);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("[device]\nl_per_metre = 1.0\n").is_err());
    }

    #[test]
    fn empty_pattern_table_unloads_the_line() {
        let c = RunConfig::parse("[device.pattern]\n").unwrap();
        assert!(c.device().unwrap().pattern.is_unloaded());
    }

    #[test]
    fn problems_name_fields() {
        let c = RunConfig::parse("[device]\npreset = \"x\"\ni_star = -1\n[pump]\nratio = 2\n").unwrap();
        let mut p = Problems::default();
        c.validate_common(&mut p);
        let all = p.0.join("\n");
        assert!(all.contains("device.preset"));
        assert!(all.contains("device.i_star"));
        assert!(all.contains("pump.ratio"));
    }

    #[test]
    fn chain_from_loss_in_db() {
        let c = RunConfig::parse("[noise.chain]\nloss_db = 1.0\n").unwrap();
        let ch = c.chain();
        assert!((ch.l1 - 10f64.powf(-0.1)).abs() < 1e-15);
        assert_eq!(ch.l1, ch.l2);
    }
}
