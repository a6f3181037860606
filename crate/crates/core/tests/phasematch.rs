mod common;

use common::{preset, table};
use kitwpa_core::phasematch::{idler_freq, matching_residual};
use kitwpa_core::*;
use proptest::prelude::*;

fn bands_at(f_pump: f64, i_pump: f64) -> BandPrediction {
    let p = preset();
    let pump = PumpConfig::new(f_pump, i_pump);
    predict_bands(table(), &pump, p.line.i_star).unwrap()
}

fn overlaps(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 < b.1 && b.0 < a.1
}

#[test]
fn bands_avoid_stopbands() {
    let t = table();
    for fp in [10.5e9, 10.6e9, 10.7e9] {
        let b = bands_at(fp, preset().pump.i_pump);
        for band in [b.signal_band, b.idler_band, b.around_pump_band].into_iter().flatten() {
            for &sb in &t.stopbands {
                assert!(!overlaps(band, sb), "{band:?} overlaps {sb:?}");
            }
        }
    }
}

#[test]
fn signal_band_brackets_design_band() {
    let b = bands_at(10.6e9, preset().pump.i_pump);
    let (lo, hi) = b.signal_band.unwrap();
    assert!(lo < 4e9 && hi > 8e9, "{lo} {hi}");
    assert!((b.idler_gap_freq.unwrap() - 8.7e9).abs() < 0.1e9);
}

#[test]
fn pump_sweep_moves_band_edges_monotonically() {
    let ip = preset().pump.i_pump;
    let edges: Vec<(f64, f64)> = (0..=8)
        .map(|n| bands_at(10.5e9 + n as f64 * 25e6, ip).signal_band.unwrap())
        .collect();
    for w in edges.windows(2) {
        assert!(w[1].0 < w[0].0, "lower edge {edges:?}");
        assert!(w[1].1 > w[0].1, "upper edge {edges:?}");
    }
}

#[test]
fn pump_current_widens_signal_band() {
    let widths: Vec<f64> = [50e-6, 100e-6, 200e-6, 300e-6, 400e-6, 500e-6]
        .iter()
        .map(|&i| {
            let (lo, hi) = bands_at(10.6e9, i).signal_band.unwrap();
            hi - lo
        })
        .collect();
    for w in widths.windows(2) {
        assert!(w[1] > w[0], "{widths:?}");
    }
}

#[test]
fn weak_pump_collapses_to_linear_zero() {
    let b = bands_at(10.6e9, 1e-9);
    let t = table();
    assert!(!b.phase_matched.is_empty());
    for &zero in &b.phase_matched {
        let db = kitwpa_core::phasematch::delta_beta(t, zero, 10.6e9).unwrap();
        assert!(db.abs() < 1e-2, "{zero} {db}");
    }
    if let Some((lo, hi)) = b.signal_band {
        assert!(hi - lo < 50e6, "{lo} {hi}");
    }
}

proptest! {
    #[test]
    fn idler_is_an_involution_on_whole_hertz(fp in 1_000_000_000u64..20_000_000_000, fs in 1u64..2_000_000_000) {
        let (fp, fs) = (fp as f64, (fs as f64) * fp as f64 / 2e9 + 1.0);
        let fs = fs.round();
        let fi = idler_freq(fp, fs).unwrap();
        prop_assert_eq!(idler_freq(fp, fi).unwrap(), fs);
    }

    #[test]
    fn idler_round_trip_within_an_ulp(fp in 1e9f64..20e9, frac in 0.01f64..1.99) {
        let fs = fp * frac;
        let back = idler_freq(fp, idler_freq(fp, fs).unwrap()).unwrap();
        prop_assert!((back - fs).abs() <= 2.0 * f64::EPSILON * 2.0 * fp);
    }

    #[test]
    fn residual_is_symmetric_about_pump(fs in 3e9f64..8.1e9) {
        let p = preset();
        let fi = 2.0 * p.pump.f_pump - fs;
        let a = matching_residual(table(), fs, &p.pump, p.line.i_star);
        let b = matching_residual(table(), fi, &p.pump, p.line.i_star);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-9, "{} {}", a, b),
            (a, b) => prop_assert_eq!(a.is_ok(), b.is_ok()),
        }
    }
}
