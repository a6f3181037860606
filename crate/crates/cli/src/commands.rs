use std::fs;
use std::path::{Path, PathBuf};

use kitwpa_core::constants::SPEED_OF_LIGHT;
use kitwpa_core::fwm::{ripple_period, PointStatus};
use kitwpa_core::grid::linspace;
use kitwpa_core::linemodel::{fit_istar, supercell_bloch};
use kitwpa_core::noisecal::{
    deembed_loss, extract_added_noise, hemt_noise_per_bin, synth_measurement, ExtractionInputs, HemtNoise,
};
use kitwpa_core::*;
use serde_json::json;

use crate::config::{Device, Problems, RunConfig};
use crate::error::CliError;
use crate::manifest::{FileDigest, Outputs};

/// Options that can come from the command line as well as the config.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Options {
    pub mode: ToneMode,
    pub ripple_convention: RippleConvention,
    pub pump_sweep: Vec<f64>,
}

pub struct Ctx {
    pub cfg: RunConfig,
    pub opts: Options,
    pub out: Outputs,
    pub inputs: Vec<FileDigest>,
    pub warnings: Vec<String>,
    pub device: Option<Device>,
}

fn finish(p: Problems) -> Result<(), CliError> {
    if p.is_empty() {
        Ok(())
    } else {
        Err(CliError::Config(p.0))
    }
}

fn num<E: std::fmt::Display>(e: E) -> CliError {
    CliError::numerical(e)
}

impl Ctx {
    fn device(&mut self) -> Result<Device, CliError> {
        let d = self.cfg.device().map_err(num)?;
        self.device = Some(d.clone());
        Ok(d)
    }

    fn csv(&mut self, role: &str, name: &str, f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<(), CliError> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.out.write(role, name, &buf)?;
        Ok(())
    }

    fn read_trace(&mut self, role: &str, path: &Path, unit: TraceUnit, p: &mut Problems) -> Option<Trace> {
        match Trace::read_path(path, Some(unit)) {
            Ok(t) => {
                if let Ok(d) = FileDigest::of(role, path) {
                    self.inputs.push(d);
                }
                Some(t)
            }
            Err(e) => {
                p.push(&format!("noise.files.{role}"), format!("{}: {e}", path.display()));
                None
            }
        }
    }
}

/// Dispersion table covering every tone the solver may need for `pumps`.
fn mixing_table(device: &Device, cfg: &RunConfig, pumps: &[f64], f_low: f64, mode: ToneMode) -> Result<DispersionTable, CliError> {
    let fp_max = pumps.iter().cloned().fold(0.0, f64::max);
    let top = match mode {
        ToneMode::Three => 2.0 * fp_max - f_low,
        ToneMode::Six => 4.0 * fp_max - f_low,
    };
    let step = cfg.dispersion_grid().step;
    let stop = ((top + 0.5e9) / 1e9).ceil() * 1e9;
    let grid = FrequencyGrid::new(step.min(0.1e9), stop.max(cfg.dispersion_grid().stop), step);
    supercell_bloch(&device.line, &device.pattern, &grid.points()).map_err(num)
}

fn require_file(p: &mut Problems, field: &str, path: &Option<PathBuf>) {
    match path {
        None => p.push(field, "missing (required by this command)"),
        Some(x) if !x.is_file() => p.push(field, format!("file '{}' does not exist", x.display())),
        _ => {}
    }
}

fn check_file(p: &mut Problems, field: &str, path: &Option<PathBuf>) {
    if let Some(x) = path {
        if !x.is_file() {
            p.push(field, format!("file '{}' does not exist", x.display()));
        }
    }
}

fn stopbands_json(table: &DispersionTable) -> serde_json::Value {
    json!({
        "stopbands": table.stopbands.iter().map(|(a, b)| json!({"f_low_hz": a, "f_high_hz": b, "center_hz": 0.5 * (a + b)})).collect::<Vec<_>>(),
        "period_m": table.period,
        "low_frequency_velocity_mps": table.low_frequency_velocity(),
        "low_frequency_velocity_c": table.low_frequency_velocity() / SPEED_OF_LIGHT,
    })
}

pub fn dispersion(ctx: &mut Ctx) -> Result<(), CliError> {
    let mut p = Problems::default();
    ctx.cfg.validate_common(&mut p);
    finish(p)?;
    let device = ctx.device()?;
    let grid = ctx.cfg.dispersion_grid();
    let table = supercell_bloch(&device.line, &device.pattern, &grid.points()).map_err(num)?;
    ctx.csv("dispersion", "dispersion.csv", |w| table.write_csv(w, true))?;
    ctx.out.write_json("stopbands", "stopbands.json", &stopbands_json(&table))?;
    Ok(())
}

fn pumps(ctx: &Ctx, device: &Device) -> Vec<PumpConfig> {
    if ctx.opts.pump_sweep.is_empty() {
        vec![device.pump]
    } else {
        ctx.opts.pump_sweep.iter().map(|&f| device.pump.with_frequency(f)).collect()
    }
}

fn validate_pump_sweep(ctx: &Ctx, p: &mut Problems) {
    for f in &ctx.opts.pump_sweep {
        if !(f.is_finite() && *f > 0.0) {
            p.push("pump_sweep", format!("frequencies must be positive, got {f}"));
        }
    }
}

pub fn bands(ctx: &mut Ctx) -> Result<(), CliError> {
    let mut p = Problems::default();
    ctx.cfg.validate_common(&mut p);
    validate_pump_sweep(ctx, &mut p);
    finish(p)?;
    let device = ctx.device()?;
    let pumps = pumps(ctx, &device);
    let fps: Vec<f64> = pumps.iter().map(|p| p.f_pump).collect();
    let table = mixing_table(&device, &ctx.cfg, &fps, 0.1e9, ToneMode::Three)?;
    let mut out = Vec::new();
    for pump in &pumps {
        let b = predict_bands(&table, pump, device.line.i_star).map_err(num)?;
        if b.signal_band.is_none() {
            ctx.warnings.push(format!("no signal band for pump at {} Hz", pump.f_pump));
        }
        out.push(b);
    }
    if out.len() == 1 {
        ctx.out.write_json("bands", "bands.json", &out[0])?;
    } else {
        ctx.out.write_json("bands", "bands.json", &out)?;
    }
    Ok(())
}

pub fn gain(ctx: &mut Ctx) -> Result<(), CliError> {
    let mut p = Problems::default();
    ctx.cfg.validate_common(&mut p);
    validate_pump_sweep(ctx, &mut p);
    let s = ctx.cfg.sweep.clone();
    let (start, stop, n) = (s.start.unwrap_or(2e9), s.stop.unwrap_or(19e9), s.points.unwrap_or(500));
    if !(start > 0.0 && stop > start && n >= 2) {
        p.push("sweep", format!("need 0 < start < stop and points >= 2 (got {start}, {stop}, {n})"));
    }
    if let Some(x) = s.probe_dbm {
        if !x.is_finite() {
            p.push("sweep.probe_dbm", "must be finite");
        }
    }
    finish(p)?;
    let device = ctx.device()?;
    let pumps = pumps(ctx, &device);
    let fps: Vec<f64> = pumps.iter().map(|p| p.f_pump).collect();
    let table = mixing_table(&device, &ctx.cfg, &fps, start, ctx.opts.mode)?;
    let opts = GainOptions {
        probe_dbm: s.probe_dbm.unwrap_or(-90.0),
        ..GainOptions::default()
    };
    let grid = linspace(start, stop, n);
    let mut summary = Vec::new();
    for pump in &pumps {
        let curve = gain_curve(&device.line, &table, pump, &grid, ctx.opts.mode, &opts).map_err(num)?;
        let name = if pumps.len() == 1 {
            "gain.csv".to_string()
        } else {
            format!("gain_{:.3}GHz.csv", pump.f_pump / 1e9)
        };
        ctx.csv("gain", &name, |w| curve.write_csv(w))?;
        let skipped = |st| curve.points.iter().filter(|p| p.status == st).count();
        for (st, label) in [
            (PointStatus::IdlerEvanescent, "idler in a stopband"),
            (PointStatus::SignalEvanescent, "signal in a stopband"),
            (PointStatus::Degenerate, "degenerate with a pump product"),
        ] {
            let n = skipped(st);
            if n > 0 {
                ctx.warnings.push(format!("pump {} Hz: {n} points reported 0 dB ({label})", pump.f_pump));
            }
        }
        let peak = curve.peak();
        summary.push(json!({
            "file": name,
            "pump": pump,
            "peak_gain_db": peak.map(|p| p.1),
            "peak_freq_hz": peak.map(|p| p.0),
            "regions_above_3db_hz": curve.regions_above(3.0),
        }));
    }
    ctx.out.write_json("gain_summary", "gain_summary.json", &json!({ "mode": ctx.opts.mode, "probe_dbm": opts.probe_dbm, "curves": summary }))?;
    Ok(())
}

pub fn compress(ctx: &mut Ctx) -> Result<(), CliError> {
    let mut p = Problems::default();
    ctx.cfg.validate_common(&mut p);
    let c = ctx.cfg.compress.clone();
    let (a, b, step) = (c.p_start.unwrap_or(-80.0), c.p_stop.unwrap_or(-30.0), c.p_step.unwrap_or(0.5));
    if !(a.is_finite() && b > a && step > 0.0) {
        p.push("compress", format!("need p_start < p_stop and p_step > 0 (got {a}, {b}, {step})"));
    }
    if let Some(f) = c.f_signal {
        if !(f > 0.0) {
            p.push("compress.f_signal", format!("must be positive, got {f}"));
        }
    }
    finish(p)?;
    let device = ctx.device()?;
    let fs = c.f_signal.unwrap_or(6e9);
    let pump = match c.pump_dbm {
        Some(dbm) => PumpConfig::from_dbm(device.pump.f_pump, dbm),
        None if ctx.cfg.pump.i_pump.is_none() && ctx.cfg.pump.ratio.is_none() && ctx.cfg.pump.p_dbm.is_none() => {
            PumpConfig::from_dbm(device.pump.f_pump, -23.0)
        }
        None => device.pump,
    };
    let table = mixing_table(&device, &ctx.cfg, &[pump.f_pump], fs, ctx.opts.mode)?;
    let n = ((b - a) / step + 1e-9).floor() as usize + 1;
    let grid: Vec<f64> = (0..n).map(|i| a + i as f64 * step).collect();
    let r = compression_sweep(&device.line, &table, &pump, fs, &grid, ctx.opts.mode, &GainOptions::default()).map_err(num)?;
    if r.p1db_in.is_none() {
        ctx.warnings.push("gain did not compress by 1 dB inside the power grid".into());
    }
    ctx.csv("compression", "compression.csv", |w| {
        use std::io::Write;
        writeln!(w, "p_in_dBm,gain_dB")?;
        for (p, g) in &r.curve {
            writeln!(w, "{},{}", trace_fmt(*p), kitwpa_core::trace::fmt_value(*g))?;
        }
        Ok(())
    })?;
    ctx.out.write_json(
        "compression",
        "compression.json",
        &json!({
            "pump": pump,
            "mode": ctx.opts.mode,
            "f_signal_hz": r.f_signal,
            "small_signal_gain_db": r.small_signal_gain_db,
            "p1db_in_dbm": r.p1db_in,
            "p1db_out_dbm": r.p1db_out,
        }),
    )?;
    Ok(())
}

fn trace_fmt(p: f64) -> String {
    kitwpa_core::trace::fmt_value(p)
}

pub fn ripple(ctx: &mut Ctx) -> Result<(), CliError> {
    let mut p = Problems::default();
    ctx.cfg.validate_common(&mut p);
    let r = ctx.cfg.ripple.clone();
    let refl = r.r.unwrap_or(0.1);
    if !(0.0..1.0).contains(&refl) {
        p.push("ripple.r", format!("must lie in [0, 1), got {refl}"));
    }
    let (a, b, step) = (r.start.unwrap_or(6e9), r.stop.unwrap_or(6.3e9), r.step.unwrap_or(0.01e6));
    if !FrequencyGrid::new(a, b, step).is_valid() {
        p.push("ripple", "need 0 < start <= stop and step > 0");
    }
    if let Some(l) = r.length {
        if !(l > 0.0) {
            p.push("ripple.length", format!("must be positive, got {l}"));
        }
    }
    if let Some(v) = r.v_phase {
        if !(v > 0.0) {
            p.push("ripple.v_phase", format!("must be positive, got {v}"));
        }
    }
    finish(p)?;
    let device = ctx.device()?;
    let v = match r.v_phase {
        Some(v) => v * SPEED_OF_LIGHT,
        None => {
            let t = supercell_bloch(&device.line, &device.pattern, &linspace(10e6, 500e6, 50)).map_err(num)?;
            t.low_frequency_velocity()
        }
    };
    let g = 10f64.powf(r.gain_db.unwrap_or(15.0) / 20.0);
    let model = RippleModel::lossless(refl, g, v, r.length.unwrap_or(device.line.total_length));
    let conv = ctx.opts.ripple_convention;
    let trace = ripple_s21(&model, &FrequencyGrid::new(a, b, step).points(), conv).map_err(num)?;
    ctx.csv("ripple", "ripple.csv", |w| trace.write_csv(w))?;
    ctx.out.write_json(
        "ripple",
        "ripple.json",
        &json!({
            "model": model,
            "convention": conv,
            "loop_gain": model.loop_gain(conv),
            "predicted_spacing_hz": model.ripple_spacing(conv),
            "measured_period_hz": ripple_period(&trace),
        }),
    )?;
    Ok(())
}

pub fn fit_istar_cmd(ctx: &mut Ctx) -> Result<(), CliError> {
    let mut p = Problems::default();
    let s = ctx.cfg.istar.clone();
    match (&s.points, &s.file) {
        (None, None) => p.push("istar", "give either points or file"),
        (Some(_), Some(_)) => p.push("istar", "give only one of points and file"),
        _ => {}
    }
    check_file(&mut p, "istar.file", &s.file);
    if let Some(v) = &s.points {
        if v.len() < 3 {
            p.push("istar.points", format!("need at least 3 points, got {}", v.len()));
        }
    }
    finish(p)?;
    let pts: Vec<(f64, f64)> = match (&s.points, &s.file) {
        (Some(v), _) => v.iter().map(|[i, f]| (*i, *f)).collect(),
        (_, Some(path)) => {
            ctx.inputs.push(FileDigest::of("istar", path)?);
            read_istar_csv(path)?
        }
        _ => unreachable!(),
    };
    let fit = fit_istar(&pts).map_err(num)?;
    if let Some(d) = &fit.diagnostic {
        ctx.warnings.push(d.clone());
    }
    // JSON has no infinity; report the sentinel as null with the diagnostic.
    let i_star = fit.i_star.is_finite().then_some(fit.i_star);
    ctx.out.write_json(
        "istar",
        "istar.json",
        &json!({
            "i_star_a": i_star,
            "f_center0_hz": fit.f_center0,
            "residual_rms_hz": fit.residual_rms,
            "diagnostic": fit.diagnostic,
            "points": pts,
        }),
    )?;
    Ok(())
}

fn read_istar_csv(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "i_A,f_Hz" => {}
        _ => return Err(CliError::config("istar.file", "expected header 'i_A,f_Hz'")),
    }
    let mut out = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        let parse = |s: &str| s.trim().parse::<f64>().ok().filter(|x| x.is_finite());
        match (cols.as_slice(), cols.first().and_then(|s| parse(s)), cols.get(1).and_then(|s| parse(s))) {
            ([_, _], Some(i), Some(f)) => out.push((i, f)),
            _ => return Err(CliError::config("istar.file", format!("line {}: expected two numbers", n + 1))),
        }
    }
    Ok(out)
}

pub fn noise_synth(ctx: &mut Ctx) -> Result<(), CliError> {
    let mut p = Problems::default();
    let chain = ctx.cfg.chain();
    if let Err(e) = chain.validate() {
        p.push("noise.chain", e);
    }
    let s = &ctx.cfg.noise.synth;
    let (a, b, n) = (s.start.unwrap_or(4e9), s.stop.unwrap_or(8e9), s.points.unwrap_or(401));
    if !(a > 0.0 && b > a && n >= 2) {
        p.push("noise.synth", format!("need 0 < start < stop and points >= 2 (got {a}, {b}, {n})"));
    }
    let noise = s.noise_rel.unwrap_or(0.0);
    if !(0.0..0.2).contains(&noise) {
        p.push("noise.synth.noise_rel", format!("must lie in [0, 0.2), got {noise}"));
    }
    finish(p)?;
    // Whole-hertz grid so that files read back onto exactly the same grid.
    let grid: Vec<f64> = linspace(a, b, n).into_iter().map(f64::round).collect();
    let traces = synth_measurement(&chain, &grid, s.seed.unwrap_or(0), noise).map_err(num)?;
    for (stem, t) in traces.named() {
        ctx.csv(stem, &format!("{stem}.csv"), |w| t.write_csv(w))?;
    }
    ctx.out.write_json("chain", "chain.json", &chain)?;
    Ok(())
}

pub fn noise_extract(ctx: &mut Ctx) -> Result<(), CliError> {
    let mut p = Problems::default();
    let files = ctx.cfg.noise.files.clone();
    for (field, path) in [
        ("noise.files.hot", &files.hot),
        ("noise.files.cold", &files.cold),
        ("noise.files.pump_off", &files.pump_off),
        ("noise.files.bypass", &files.bypass),
        ("noise.files.gain", &files.gain),
    ] {
        require_file(&mut p, field, path);
    }
    check_file(&mut p, "noise.files.hemt", &files.hemt);
    let chain = ctx.cfg.chain();
    if !(chain.t_cold > 0.0 && chain.t_hot > chain.t_cold) {
        p.push("noise", "need t_hot > t_cold > 0");
    }
    if files.hemt.is_none() && !(chain.n_hemt >= 0.0) {
        p.push("noise.n_hemt", "must be >= 0");
    }
    finish(p)?;
    let mut p = Problems::default();
    let hot = ctx.read_trace("hot", files.hot.as_ref().unwrap(), TraceUnit::Linear, &mut p);
    let cold = ctx.read_trace("cold", files.cold.as_ref().unwrap(), TraceUnit::Linear, &mut p);
    let pump_off = ctx.read_trace("pump_off", files.pump_off.as_ref().unwrap(), TraceUnit::Db, &mut p);
    let bypass = ctx.read_trace("bypass", files.bypass.as_ref().unwrap(), TraceUnit::Db, &mut p);
    let gain = ctx.read_trace("gain", files.gain.as_ref().unwrap(), TraceUnit::Db, &mut p);
    let hemt = files.hemt.as_ref().map(|h| ctx.read_trace("hemt", h, TraceUnit::Quanta, &mut p));
    finish(p)?;
    let n_hemt = match hemt {
        Some(t) => HemtNoise::PerBin(t.unwrap()),
        None => HemtNoise::Scalar(chain.n_hemt),
    };
    let inputs = ExtractionInputs {
        hot: hot.unwrap(),
        cold: cold.unwrap(),
        pump_off: pump_off.unwrap(),
        bypass: bypass.unwrap(),
        gain: gain.unwrap(),
        n_hemt,
        t_hot: chain.t_hot,
        t_cold: chain.t_cold,
        smooth: ctx.cfg.noise.smooth.unwrap_or(1),
    };
    let r = extract_added_noise(&inputs).map_err(|e| match e {
        kitwpa_core::noisecal::NoiseError::GridMismatch(a, b) => {
            CliError::config("noise.files", format!("traces '{a}' and '{b}' are on different frequency grids"))
        }
        kitwpa_core::noisecal::NoiseError::Unit { name, expected } => {
            CliError::config(&format!("noise.files.{name}"), format!("must be in {expected}"))
        }
        e => num(e),
    })?;
    let flagged: Vec<(usize, _)> = r.flags.iter().cloned().enumerate().filter(|(_, f)| f.any()).collect();
    if !flagged.is_empty() {
        ctx.warnings.push(format!("{} of {} bins flagged (see flags.csv)", flagged.len(), r.flags.len()));
    }
    ctx.csv("n_sys", "n_sys.csv", |w| r.n_sys.write_csv(w))?;
    ctx.csv("n_a", "n_a.csv", |w| r.n_a.write_csv(w))?;
    ctx.csv("loss", "loss.csv", |w| r.loss.loss_db.write_csv(w))?;
    ctx.csv("flags", "flags.csv", |w| {
        use std::io::Write;
        writeln!(w, "freq_hz,invalid_y,below_floor,below_vacuum")?;
        for (f, fl) in r.n_a.freq.iter().zip(&r.flags) {
            writeln!(
                w,
                "{},{},{},{}",
                kitwpa_core::trace::fmt_freq(*f),
                fl.invalid_y as u8,
                fl.below_floor as u8,
                fl.below_vacuum as u8
            )?;
        }
        Ok(())
    })?;
    ctx.out.write_json(
        "summary",
        "noise_summary.json",
        &json!({
            "mean_n_a": r.mean_n_a(),
            "mean_n_sys": mean(&r.n_sys.values),
            "mean_loss_db": mean(&r.loss.loss_db.values),
            "flagged_bins": flagged.len(),
            "bins": r.flags.len(),
        }),
    )?;
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn noise_hemt(ctx: &mut Ctx) -> Result<(), CliError> {
    let mut p = Problems::default();
    let files = ctx.cfg.noise.files.clone();
    require_file(&mut p, "noise.files.hot_off", &files.hot_off);
    require_file(&mut p, "noise.files.cold_off", &files.cold_off);
    check_file(&mut p, "noise.files.bypass", &files.bypass);
    check_file(&mut p, "noise.files.pump_off", &files.pump_off);
    if files.bypass.is_some() != files.pump_off.is_some() {
        p.push("noise.files", "bypass and pump_off must be given together");
    }
    let chain = ctx.cfg.chain();
    if let Err(e) = chain.validate() {
        p.push("noise.chain", e);
    }
    finish(p)?;
    let mut p = Problems::default();
    let hot = ctx.read_trace("hot_off", files.hot_off.as_ref().unwrap(), TraceUnit::Linear, &mut p);
    let cold = ctx.read_trace("cold_off", files.cold_off.as_ref().unwrap(), TraceUnit::Linear, &mut p);
    let loss = match (&files.bypass, &files.pump_off) {
        (Some(b), Some(o)) => {
            let b = ctx.read_trace("bypass", b, TraceUnit::Db, &mut p);
            let o = ctx.read_trace("pump_off", o, TraceUnit::Db, &mut p);
            b.zip(o)
        }
        _ => None,
    };
    finish(p)?;
    let (hot, cold) = (hot.unwrap(), cold.unwrap());
    let n = hot.len();
    let (l1, l2) = match loss {
        Some((b, o)) => {
            let est = deembed_loss(&b, &o).map_err(|e| CliError::config("noise.files", e))?;
            if est.factor.len() != n || !b.same_grid(&hot) {
                return Err(CliError::config("noise.files", "loss traces are on a different grid from hot_off"));
            }
            (est.factor.clone(), est.factor)
        }
        None => (vec![chain.l1; n], vec![chain.l2; n]),
    };
    let h = hemt_noise_per_bin(&hot, &cold, &l1, &l2, chain.t_hot, chain.t_cold).map_err(|e| match e {
        kitwpa_core::noisecal::NoiseError::GridMismatch(..) => CliError::config("noise.files", e),
        e => num(e),
    })?;
    let bad = h.invalid.iter().filter(|b| **b).count();
    if bad > 0 {
        ctx.warnings.push(format!("{bad} bins have Y <= 1 and were set to 0"));
    }
    ctx.csv("hemt", "hemt.csv", |w| h.n_hemt.write_csv(w))?;
    ctx.out.write_json(
        "hemt",
        "hemt_summary.json",
        &json!({ "mean_n_hemt": h.mean(), "invalid_bins": bad, "bins": n }),
    )?;
    Ok(())
}
