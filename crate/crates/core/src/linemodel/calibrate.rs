use std::f64::consts::PI;

use super::bloch::supercell_matrix;
use super::{require_positive, FilmLine, LineError, NetworkElectricals, StubPattern};
use crate::constants::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    /// Frequency at which the low-frequency limit is evaluated, Hz.
    pub probe_freq: f64,
    /// Relative tolerance on both impedance and velocity.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            probe_freq: 10e6,
            tol: 1e-9,
            max_iter: 50,
        }
    }
}

/// Solves for bare-line and stub electricals such that the loaded line has
/// the impedance `z_target` and phase velocity `v_target` in the
/// low-frequency limit.
pub fn calibrate_loaded_line(line: &FilmLine, pattern: &StubPattern) -> Result<FilmLine, LineError> {
    calibrate_loaded_line_with(line, pattern, CalibrationOptions::default())
}

pub fn calibrate_loaded_line_with(
    line: &FilmLine,
    pattern: &StubPattern,
    opts: CalibrationOptions,
) -> Result<FilmLine, LineError> {
    let (z_t, v_frac) = match (line.z_target, line.v_target) {
        (Some(z), Some(v)) => (z, v),
        _ => return Err(LineError::MissingTarget),
    };
    line.validate()?;
    pattern.validate()?;
    require_positive("probe_freq", opts.probe_freq)?;
    let v_t = v_frac * SPEED_OF_LIGHT;
    let l_t = z_t / v_t;
    let c_t = 1.0 / (z_t * v_t);

    let mut out = *line;
    out.l_per_m = l_t;
    out.c_per_m = c_t;

    if pattern.is_unloaded() {
        out.network = Some(NetworkElectricals {
            bare_l_per_m: l_t,
            bare_c_per_m: c_t,
            stub_l_per_m: l_t,
            stub_c_per_m: c_t,
        });
        return Ok(out);
    }

    // Stub capacitance adds to the bare line per unit length in the
    // quasi-static limit; the series inductance is unchanged.
    let fill = pattern.mean_stub_length() / pattern.effective_pitch();
    let fixed_stub = match (pattern.stub_z0, pattern.stub_vph) {
        (None, None) => None,
        (z, v) => {
            let z = z.unwrap_or((l_t / c_t).sqrt());
            let v = v.unwrap_or(v_t);
            Some((z / v, 1.0 / (z * v)))
        }
    };
    let mut net = match fixed_stub {
        None => {
            let c_b = c_t / (1.0 + fill);
            NetworkElectricals {
                bare_l_per_m: l_t,
                bare_c_per_m: c_b,
                stub_l_per_m: l_t,
                stub_c_per_m: c_b,
            }
        }
        Some((l_s, c_s)) => {
            let c_b = c_t - c_s * fill;
            if c_b <= 0.0 {
                return Err(LineError::CalibrationFailed {
                    residual: -c_b / c_t,
                });
            }
            NetworkElectricals {
                bare_l_per_m: l_t,
                bare_c_per_m: c_b,
                stub_l_per_m: l_s,
                stub_c_per_m: c_s,
            }
        }
    };

    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        out.network = Some(net);
        let (z_m, v_m) = low_frequency_params(&out, pattern, opts.probe_freq)?;
        residual = (z_m / z_t - 1.0).abs().max((v_m / v_t - 1.0).abs());
        if residual < opts.tol {
            return Ok(out);
        }
        let sl = (z_t / z_m) * (v_m / v_t);
        let sc = (z_m / z_t) * (v_m / v_t);
        net.bare_l_per_m *= sl;
        net.bare_c_per_m *= sc;
        if fixed_stub.is_none() {
            net.stub_l_per_m *= sl;
            net.stub_c_per_m *= sc;
        }
        if !(net.bare_l_per_m.is_finite() && net.bare_c_per_m > 0.0) {
            break;
        }
    }
    Err(LineError::CalibrationFailed { residual })
}

/// Bloch-impedance and phase velocity of the loaded network at `f`.
pub(crate) fn low_frequency_params(
    line: &FilmLine,
    pattern: &StubPattern,
    f: f64,
) -> Result<(f64, f64), LineError> {
    let m = supercell_matrix(line, pattern, f)?;
    let kd = m.half_trace().re.clamp(-1.0, 1.0).acos();
    if kd <= 0.0 {
        return Err(LineError::CalibrationFailed { residual: f64::NAN });
    }
    let k = kd / pattern.supercell_length();
    let z = m.image_impedance().re;
    Ok((z, 2.0 * PI * f / k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FrequencyGrid;
    use crate::linemodel::supercell_bloch;

    fn pattern() -> StubPattern {
        StubPattern::new(2.2e-6, 10.8e-6, 2.08e-6, 122.7e-6)
    }

    fn target_line(z: f64, v: f64) -> FilmLine {
        let mut l = FilmLine::new(16.64e-6, 6.45e-9, 3.2e-3, 0.1);
        l.z_target = Some(z);
        l.v_target = Some(v);
        l
    }

    #[test]
    fn reproduces_round_targets() {
        let line = target_line(50.0, 0.010);
        let cal = calibrate_loaded_line(&line, &pattern()).unwrap();
        let (z, v) = low_frequency_params(&cal, &pattern(), 10e6).unwrap();
        assert!((z / 50.0 - 1.0).abs() < 1e-2, "z = {z}");
        assert!((v / (0.010 * SPEED_OF_LIGHT) - 1.0).abs() < 1e-2, "v = {v}");
        let net = cal.network.unwrap();
        assert!(net.bare_c_per_m < cal.c_per_m);
    }

    #[test]
    fn unloaded_pattern_returns_bare_line() {
        let line = target_line(50.0, 0.010);
        let cal = calibrate_loaded_line(&line, &StubPattern::unloaded(2.2e-6)).unwrap();
        assert!((cal.impedance() - 50.0).abs() < 1e-12);
        let net = cal.network.unwrap();
        assert_eq!(net.bare_l_per_m, cal.l_per_m);
        assert_eq!(net.bare_c_per_m, cal.c_per_m);
    }

    #[test]
    fn missing_target_is_an_error() {
        let line = FilmLine::new(16.64e-6, 6.45e-9, 3.2e-3, 0.1);
        assert_eq!(
            calibrate_loaded_line(&line, &pattern()).unwrap_err(),
            LineError::MissingTarget
        );
    }

    #[test]
    fn low_frequency_slope_matches_target_velocity() {
        let line = target_line(50.0, 0.010);
        let cal = calibrate_loaded_line(&line, &pattern()).unwrap();
        let grid = FrequencyGrid::new(0.1e9, 0.2e9, 1e6).points();
        let t = supercell_bloch(&cal, &pattern(), &grid).unwrap();
        let k = t.re_k();
        let slope = (k[1] - k[0]) / (grid[1] - grid[0]);
        let expected = 2.0 * PI / (0.010 * SPEED_OF_LIGHT);
        assert!((slope / expected - 1.0).abs() < 1e-2, "slope = {slope}");
    }

    #[test]
    fn oversized_fixed_stub_fails() {
        let mut p = pattern();
        // Stub capacitance per length far above the loaded total.
        p.stub_z0 = Some(0.5);
        let err = calibrate_loaded_line(&target_line(50.0, 0.010), &p).unwrap_err();
        assert!(matches!(err, LineError::CalibrationFailed { .. }));
    }

    #[test]
    fn fixed_stub_override_still_hits_targets() {
        let mut p = pattern();
        p.stub_z0 = Some(200.0);
        p.stub_vph = Some(0.05 * SPEED_OF_LIGHT);
        let cal = calibrate_loaded_line(&target_line(50.0, 0.010), &p).unwrap();
        let (z, v) = low_frequency_params(&cal, &p, 10e6).unwrap();
        assert!((z / 50.0 - 1.0).abs() < 1e-6);
        assert!((v / (0.010 * SPEED_OF_LIGHT) - 1.0).abs() < 1e-6);
        let net = cal.network.unwrap();
        assert!(((net.stub_l_per_m / net.stub_c_per_m).sqrt() - 200.0).abs() < 1e-9);
    }
}
