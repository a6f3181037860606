mod common;

use common::{closed_form_gain, db, multipath_s21, preset, table};
use kitwpa_core::constants::{current_from_dbm, SYSTEM_IMPEDANCE};
use kitwpa_core::fwm::{
    integrate_observed, ripple_period, signal_gain, GainOptions, PointStatus, ToneRole,
};
use kitwpa_core::phasematch::delta_beta;
use kitwpa_core::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pumped_set(fs: f64, mode: ToneMode, p_sig_dbm: f64, i_pump: f64) -> ToneSet {
    let mut s = build_tone_set(preset().pump.f_pump, fs, table(), mode).unwrap();
    s.set_amp(ToneRole::Pump, Complex64::new(i_pump, 0.0));
    s.set_amp(
        ToneRole::Signal,
        Complex64::new(current_from_dbm(p_sig_dbm, SYSTEM_IMPEDANCE), 0.0),
    );
    s
}

/// Largest relative drift of total power and of the signal/idler photon-flux
/// difference seen along the line.
fn conservation_drift(set: &ToneSet) -> (f64, f64) {
    let p = preset();
    let live: Vec<usize> = (0..set.tones.len()).filter(|&j| !set.tones[j].evanescent).collect();
    let (si, ii) = (set.index_of("s").unwrap(), set.index_of("i").unwrap());
    let (ws, wi) = (set.tones[si].f, set.tones[ii].f);
    let mut e0 = None;
    let mut m0 = None;
    let mut e_err: f64 = 0.0;
    let mut m_err: f64 = 0.0;
    let mut m_scale: f64 = 0.0;
    integrate_observed(set, &p.line, p.line.total_length, &IntegrationOptions::default(), |_, a| {
        let e: f64 = live.iter().map(|&j| a[j].norm_sqr()).sum();
        let fs = a[si].norm_sqr() / ws;
        let m = fs - a[ii].norm_sqr() / wi;
        let e0 = *e0.get_or_insert(e);
        let m0 = *m0.get_or_insert(m);
        e_err = e_err.max((e - e0).abs() / e0);
        m_err = m_err.max((m - m0).abs());
        m_scale = m_scale.max(fs);
    })
    .unwrap();
    (e_err, m_err / m_scale)
}

#[test]
fn energy_and_photon_flux_are_conserved() {
    let ip = preset().pump.i_pump;
    for mode in [ToneMode::Three, ToneMode::Six] {
        for fs in [4.5e9, 6e9, 7.1e9, 10.2e9, 14e9] {
            for p_sig in [-90.0, -50.0] {
                let (e, m) = conservation_drift(&pumped_set(fs, mode, p_sig, ip));
                assert!(e < 1e-8, "{mode} {fs} {p_sig}: energy drift {e:e}");
                if mode == ToneMode::Three {
                    assert!(m < 1e-8, "{fs} {p_sig}: Manley-Rowe drift {m:e}");
                }
            }
        }
    }
}

#[test]
fn undepleted_gain_matches_closed_form() {
    let p = preset();
    let t = table();
    let bands = predict_bands(t, &p.pump, p.line.i_star).unwrap();
    let (lo, hi) = bands.signal_band.unwrap();
    let fp = p.pump.f_pump;
    let kp = t.kappa(fp).unwrap();
    let ip2 = p.pump.i_pump * p.pump.i_pump;
    let coef = kp / (8.0 * p.line.i_star * p.line.i_star * fp);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let fs = rng.random_range(lo..hi);
        let fi = 2.0 * fp - fs;
        let ode = signal_gain(&p.line, t, &p.pump, fs, ToneMode::Three, &GainOptions::default()).unwrap();
        assert_eq!(ode.status, PointStatus::Amplified);
        let g = closed_form_gain(
            coef * fs,
            coef * fi,
            coef * fp,
            ip2,
            delta_beta(t, fs, fp).unwrap(),
            p.line.total_length,
        );
        worst = worst.max((ode.gain_db - db(g)).abs());
    }
    assert!(worst < 0.05, "worst deviation {worst} dB");
}

#[test]
fn small_signal_gain_is_probe_independent() {
    let p = preset();
    for fs in [5e9, 7e9, 10e9, 15e9] {
        let g: Vec<f64> = [-120.0, -100.0, -80.0]
            .iter()
            .map(|&probe| {
                let opts = GainOptions {
                    probe_dbm: probe,
                    ..GainOptions::default()
                };
                signal_gain(&p.line, table(), &p.pump, fs, ToneMode::Six, &opts)
                    .unwrap()
                    .gain_db
            })
            .collect();
        let spread = g.iter().cloned().fold(f64::MIN, f64::max) - g.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 0.01, "{fs}: {g:?}");
    }
}

#[test]
fn idler_conversion_is_gain_minus_one() {
    let p = preset();
    for fs in [4.5e9, 6e9, 7.5e9] {
        let pt = signal_gain(&p.line, table(), &p.pump, fs, ToneMode::Three, &GainOptions::default()).unwrap();
        let g = 10f64.powf(pt.gain_db / 10.0);
        let gi = 10f64.powf(pt.idler_gain_db.unwrap() / 10.0);
        assert!((gi / (g - 1.0) - 1.0).abs() < 0.01, "{fs}: {g} {gi}");
    }
}

#[test]
fn no_pump_means_no_gain() {
    let p = preset();
    let pump = p.pump.with_current(0.0);
    let grid: Vec<f64> = (0..40).map(|i| 3e9 + i as f64 * 0.4e9).collect();
    let curve = gain_curve(&p.line, table(), &pump, &grid, ToneMode::Six, &GainOptions::default()).unwrap();
    for pt in &curve.points {
        assert!(pt.gain_db.abs() < 1e-9, "{} {}", pt.f, pt.gain_db);
    }
}

#[test]
fn zero_pump_leaves_amplitudes_up_to_phase() {
    let p = preset();
    let set = pumped_set(6e9, ToneMode::Six, -60.0, 0.0);
    let out = integrate(&set, &p.line, p.line.total_length, &IntegrationOptions::default()).unwrap();
    for (a, b) in set.tones.iter().zip(&out.tones) {
        assert!((a.amp.norm() - b.amp.norm()).abs() <= 1e-12 * a.amp.norm().max(1e-30));
    }
}

#[test]
fn gain_curve_has_three_bands_and_notches() {
    let p = preset();
    let grid = kitwpa_core::grid::linspace(2e9, 19e9, 171);
    let curve = gain_curve(&p.line, table(), &p.pump, &grid, ToneMode::Three, &GainOptions::default()).unwrap();
    let regions = curve.regions_above(3.0);
    assert_eq!(regions.len(), 3, "{regions:?}");
    assert!(regions[0].1 < 8.7e9 && regions[1].0 > 8.7e9);
    assert!(regions[1].1 < 12.5e9 && regions[2].0 > 12.5e9);
    assert!(curve.peak().unwrap().1 > 20.0);
}

fn compression_at(line: &FilmLine, pump: &PumpConfig, grid: &[f64], probe_dbm: f64) -> CompressionResult {
    let opts = GainOptions {
        probe_dbm,
        ..GainOptions::default()
    };
    compression_sweep(line, table(), pump, 6e9, grid, ToneMode::Three, &opts).unwrap()
}

#[test]
fn compression_points_differ_by_gain_minus_one() {
    let p = preset();
    let grid: Vec<f64> = (0..=60).map(|i| -70.0 + 0.5 * i as f64).collect();
    let r = compression_at(&p.line, &p.compression_pump(), &grid, -90.0);
    let (pin, pout) = (r.p1db_in.unwrap(), r.p1db_out.unwrap());
    assert!((pout - pin - (r.small_signal_gain_db - 1.0)).abs() < 1e-12);
}

#[test]
fn halving_istar_shifts_compression_by_six_db() {
    let p = preset();
    let grid: Vec<f64> = (0..=60).map(|i| -70.0 + 0.5 * i as f64).collect();
    let base = compression_at(&p.line, &p.compression_pump(), &grid, -90.0);
    let mut line = p.line;
    line.i_star /= 2.0;
    let pump = p.compression_pump().with_current(p.compression_pump().i_pump / 2.0);
    let shift = 20.0 * 2f64.log10();
    let grid2: Vec<f64> = grid.iter().map(|g| g - shift).collect();
    let half = compression_at(&line, &pump, &grid2, -90.0 - shift);
    assert!((half.small_signal_gain_db - base.small_signal_gain_db).abs() < 1e-6);
    let d = base.p1db_in.unwrap() - half.p1db_in.unwrap();
    assert!((d - shift).abs() < 0.05, "shift {d}");
}

#[test]
fn printed_ripple_matches_multipath_series() {
    let r = 0.1;
    let g = 10f64.powf(15.0 / 20.0);
    let model = RippleModel::lossless(r, g, 0.0102 * kitwpa_core::constants::SPEED_OF_LIGHT, 0.1);
    let grid: Vec<f64> = (0..2000).map(|i| 6e9 + i as f64 * 0.05e6).collect();
    let trace = ripple_s21(&model, &grid, RippleConvention::Printed).unwrap();
    let series: Vec<f64> = grid
        .iter()
        .map(|&f| {
            let kl = 2.0 * std::f64::consts::PI * f / model.v_phase * model.length;
            20.0 * multipath_s21(r, model.t, g, kl, 10_000).norm().log10()
        })
        .collect();
    let pp = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
    assert!((pp(&trace.values) - pp(&series)).abs() < 1e-9);
    for (a, b) in trace.values.iter().zip(&series) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn round_trip_ripple_spacing() {
    let v = preset().line.phase_velocity();
    let model = RippleModel::lossless(0.1, 10f64.powf(15.0 / 20.0), v, 0.1);
    let grid: Vec<f64> = (0..20_001).map(|i| 6e9 + i as f64 * 0.01e6).collect();
    let trace = ripple_s21(&model, &grid, RippleConvention::RoundTrip).unwrap();
    let period = ripple_period(&trace).unwrap();
    assert!((period - 15e6).abs() < 1e6, "{period}");
}

#[test]
fn printed_ripple_diverges_at_inverse_r_squared() {
    let r: f64 = 0.3;
    let v = preset().line.phase_velocity();
    let grid = [6e9, 6.1e9];
    for (g, ok) in [(0.998 / (r * r), true), (0.999 / (r * r), true), (1.0 / (r * r), false), (1.2 / (r * r), false)] {
        let m = RippleModel::lossless(r, g, v, 0.1);
        let res = ripple_s21(&m, &grid, RippleConvention::Printed);
        assert_eq!(res.is_ok(), ok, "g = {g}");
    }
}
