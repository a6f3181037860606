use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/noise")
}

fn kitwpa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kitwpa"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = vec!["--out-dir", dir.to_str().unwrap()];
    all.extend_from_slice(args);
    kitwpa(&all)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// `(freq, value)` rows of a trace CSV.
fn trace_rows(path: &Path) -> Vec<(f64, f64)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (c[0].parse().unwrap(), c[1].parse().unwrap())
        })
        .collect()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p
}

fn sha(path: &Path) -> Vec<u8> {
    Sha256::digest(fs::read(path).unwrap()).to_vec()
}

#[test]
fn dispersion_is_byte_identical_on_rerun() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run_in(&a, &["dispersion"]).status.success());
    assert!(run_in(&b, &["dispersion"]).status.success());
    for f in ["dispersion.csv", "stopbands.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn preset_has_one_stopband_covering_12_5_ghz() {
    let tmp = TempDir::new().unwrap();
    let o = run_in(tmp.path(), &["--preset", "nbtin-4to8", "dispersion"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sb = json(&tmp.path().join("stopbands.json"));
    let bands = sb["stopbands"].as_array().unwrap();
    assert_eq!(bands.len(), 1);
    let (lo, hi) = (bands[0]["f_low_hz"].as_f64().unwrap(), bands[0]["f_high_hz"].as_f64().unwrap());
    assert!(lo < 12.5e9 && 12.5e9 < hi, "{lo} {hi}");
}

#[test]
fn unloaded_line_has_no_stopbands() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[device.pattern]\n");
    let out = tmp.path().join("out");
    let o = run_in(&out, &["--config", cfg.to_str().unwrap(), "dispersion"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sb = json(&out.join("stopbands.json"));
    assert!(sb["stopbands"].as_array().unwrap().is_empty());
}

#[test]
fn dispersion_csv_has_integer_frequencies() {
    let tmp = TempDir::new().unwrap();
    assert!(run_in(tmp.path(), &["dispersion"]).status.success());
    let text = fs::read_to_string(tmp.path().join("dispersion.csv")).unwrap();
    for line in text.lines().skip(1).take(50) {
        let f = line.split(',').next().unwrap();
        assert!(f.bytes().all(|b| b.is_ascii_digit()), "{f}");
    }
}

#[test]
fn noise_extract_recovers_fixture_added_noise() {
    let tmp = TempDir::new().unwrap();
    let cfg = fixtures().join("extract.toml");
    let before: Vec<_> = ["hot", "cold", "pump_off", "bypass", "gain"]
        .iter()
        .map(|s| sha(&fixtures().join(format!("{s}.csv"))))
        .collect();
    let o = run_in(tmp.path(), &["--config", cfg.to_str().unwrap(), "noise", "extract"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = trace_rows(&tmp.path().join("n_a.csv"));
    assert_eq!(rows.len(), 81);
    for (f, n_a) in rows {
        assert!((n_a - 0.7).abs() < 1e-6, "{f}: {n_a}");
    }
    let after: Vec<_> = ["hot", "cold", "pump_off", "bypass", "gain"]
        .iter()
        .map(|s| sha(&fixtures().join(format!("{s}.csv"))))
        .collect();
    assert_eq!(before, after);
    let m = json(&tmp.path().join("manifest.json"));
    assert_eq!(m["command"], "noise extract");
    assert_eq!(m["inputs"].as_array().unwrap().len(), 5);
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn noise_hemt_recovers_fixture_value() {
    let tmp = TempDir::new().unwrap();
    let cfg = fixtures().join("hemt.toml");
    let o = run_in(tmp.path(), &["--config", cfg.to_str().unwrap(), "noise", "hemt"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for (f, n) in trace_rows(&tmp.path().join("hemt.csv")) {
        assert!((n - 13.0).abs() < 1e-6, "{f}: {n}");
    }
}

#[test]
fn noise_synth_reproduces_fixtures() {
    let tmp = TempDir::new().unwrap();
    let cfg = fixtures().join("synth.toml");
    let o = run_in(tmp.path(), &["--config", cfg.to_str().unwrap(), "noise", "synth"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for s in ["hot", "cold", "hot_off", "cold_off", "pump_off", "bypass", "gain"] {
        let f = format!("{s}.csv");
        assert_eq!(fs::read(tmp.path().join(&f)).unwrap(), fs::read(fixtures().join(&f)).unwrap(), "{f}");
    }
}

#[test]
fn missing_gain_trace_is_a_config_error_naming_the_field() {
    let tmp = TempDir::new().unwrap();
    let fx = fixtures();
    let text = format!(
        "[noise.files]\nhot = {:?}\ncold = {:?}\npump_off = {:?}\nbypass = {:?}\n",
        fx.join("hot.csv"),
        fx.join("cold.csv"),
        fx.join("pump_off.csv"),
        fx.join("bypass.csv")
    );
    let cfg = write_config(tmp.path(), &text);
    let out = tmp.path().join("out");
    let o = run_in(&out, &["--config", cfg.to_str().unwrap(), "noise", "extract"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("noise.files.gain"), "{}", stderr(&o));
    assert!(!out.exists(), "nothing may be written before validation passes");
}

#[test]
fn all_config_problems_are_reported_together() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[device]\npreset = \"nope\"\nlength = -1.0\n[pump]\nf_pump = -5.0\n",
    );
    let o = run_in(&tmp.path().join("out"), &["--config", cfg.to_str().unwrap(), "gain"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    for field in ["device.preset", "device.length", "pump.f_pump"] {
        assert!(e.contains(field), "{field} missing from: {e}");
    }
}

#[test]
fn unknown_keys_and_bad_flags_are_config_errors() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[device]\nbogus = 1\n");
    let o = run_in(tmp.path(), &["--config", cfg.to_str().unwrap(), "dispersion"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(run_in(tmp.path(), &["--mode", "nine", "gain"]).status.code(), Some(2));
    assert_eq!(run_in(tmp.path(), &["--ripple-convention", "x", "ripple"]).status.code(), Some(2));
}

#[test]
fn diverging_ripple_loop_is_a_numerical_failure() {
    let tmp = TempDir::new().unwrap();
    // r^2 g = 0.25 * 10^(12.1/10) > 1.
    let cfg = write_config(tmp.path(), "[ripple]\nr = 0.5\ngain_db = 6.05\n");
    let o = run_in(
        &tmp.path().join("out"),
        &["--config", cfg.to_str().unwrap(), "--ripple-convention", "roundtrip", "ripple"],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn ripple_spacing_follows_convention() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run_in(&a, &["--ripple-convention", "roundtrip", "ripple"]).status.success());
    assert!(run_in(&b, &["--ripple-convention", "printed", "ripple"]).status.success());
    let ra = json(&a.join("ripple.json"))["measured_period_hz"].as_f64().unwrap();
    let rb = json(&b.join("ripple.json"))["measured_period_hz"].as_f64().unwrap();
    assert!((ra - 15.26e6).abs() < 1e6, "{ra}");
    assert!((rb / ra - 2.0).abs() < 0.01, "{rb}");
}

#[test]
fn pump_sweep_gives_one_curve_per_pump_with_monotone_edges() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[sweep]\nstart = 3e9\nstop = 9e9\npoints = 121\n");
    let out = tmp.path().join("out");
    let o = run_in(
        &out,
        &[
            "--config",
            cfg.to_str().unwrap(),
            "--mode",
            "three",
            "--pump-sweep",
            "10.55e9,10.60e9,10.65e9",
            "gain",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["gain_10.550GHz.csv", "gain_10.600GHz.csv", "gain_10.650GHz.csv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let summary = json(&out.join("gain_summary.json"));
    let upper: Vec<f64> = summary["curves"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| {
            let regions = c["regions_above_3db_hz"].as_array().unwrap();
            let band = regions
                .iter()
                .find(|r| r[0].as_f64().unwrap() < 6e9 && 6e9 < r[1].as_f64().unwrap())
                .expect("a band around 6 GHz");
            band[1].as_f64().unwrap()
        })
        .collect();
    assert!(upper.windows(2).all(|w| w[1] > w[0]), "{upper:?}");
}

#[test]
fn bands_follow_the_pump() {
    let tmp = TempDir::new().unwrap();
    let o = run_in(tmp.path(), &["--pump-sweep", "10.4e9,10.6e9,10.8e9", "bands"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let b = json(&tmp.path().join("bands.json"));
    let hi: Vec<f64> = b.as_array().unwrap().iter().map(|x| x["signal_band"][1].as_f64().unwrap()).collect();
    assert!(hi.windows(2).all(|w| w[1] > w[0]), "{hi:?}");
}

#[test]
fn compress_reports_compression_point() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[compress]\np_start = -70.0\np_stop = -40.0\np_step = 1.0\n");
    let out = tmp.path().join("out");
    let o = run_in(&out, &["--config", cfg.to_str().unwrap(), "--mode", "three", "compress"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let c = json(&out.join("compression.json"));
    let g0 = c["small_signal_gain_db"].as_f64().unwrap();
    let (pin, pout) = (c["p1db_in_dbm"].as_f64().unwrap(), c["p1db_out_dbm"].as_f64().unwrap());
    assert!((pout - pin - (g0 - 1.0)).abs() < 1e-9);
    assert!(fs::read_to_string(out.join("compression.csv")).unwrap().lines().count() == 32);
}

#[test]
fn fit_istar_reads_points_from_file() {
    let tmp = TempDir::new().unwrap();
    let i_star = 3.2e-3f64;
    let f0 = 12.42e9;
    let mut csv = String::from("i_A,f_Hz\n");
    for k in 0..6 {
        let i = k as f64 * 0.2e-3;
        let f = f0 * (1.0 + (i / i_star).powi(2)).powf(-0.5);
        csv.push_str(&format!("{i},{f}\n"));
    }
    fs::write(tmp.path().join("shift.csv"), csv).unwrap();
    let cfg = write_config(tmp.path(), "[istar]\nfile = \"shift.csv\"\n");
    let out = tmp.path().join("out");
    let o = run_in(&out, &["--config", cfg.to_str().unwrap(), "fit-istar"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&out.join("istar.json"));
    let got = r["i_star_a"].as_f64().unwrap();
    assert!((got / i_star - 1.0).abs() < 0.01, "{got}");
}
