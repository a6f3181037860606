use serde::{Deserialize, Serialize};

use super::LineError;

/// Result of fitting the characteristic current to stopband shifts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IstarFit {
    /// Characteristic current, A. `f64::INFINITY` when no shift is observable.
    pub i_star: f64,
    /// Zero-current stopband centre, Hz.
    pub f_center0: f64,
    /// RMS of the frequency residuals, Hz.
    pub residual_rms: f64,
    pub diagnostic: Option<String>,
}

/// Stopband centre at DC current `i`: `f0 / sqrt(1 + i^2 / i_star^2)`.
pub fn stopband_shift_model(f_center0: f64, i: f64, i_star: f64) -> f64 {
    let r = i / i_star;
    f_center0 / (1.0 + r * r).sqrt()
}

/// Least-squares fit of [`stopband_shift_model`] to `(i_dc, f_center)` pairs.
///
/// A linear fit of `1/f^2` against `i^2` seeds a Gauss-Newton refinement on
/// the frequencies themselves.
pub fn fit_istar(points: &[(f64, f64)]) -> Result<IstarFit, LineError> {
    if points.len() < 3 {
        return Err(LineError::FitDegenerate(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    for &(i, f) in points {
        if !i.is_finite() || !(f.is_finite() && f > 0.0) {
            return Err(LineError::FitDegenerate(format!(
                "invalid point ({i} A, {f} Hz)"
            )));
        }
    }
    let x: Vec<f64> = points.iter().map(|&(i, _)| i * i).collect();
    let n = points.len() as f64;
    let x_mean = x.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - x_mean).powi(2)).sum();
    let x_max = x.iter().cloned().fold(0.0, f64::max);
    if x_max == 0.0 || sxx <= 1e-24 * x_max * x_max * n {
        return Err(LineError::FitDegenerate(
            "currents are not distinct in magnitude".into(),
        ));
    }

    let y: Vec<f64> = points.iter().map(|&(_, f)| 1.0 / (f * f)).collect();
    let y_mean = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - x_mean) * (b - y_mean)).sum();
    let b = sxy / sxx;
    let a = y_mean - b * x_mean;
    if !(a > 0.0) {
        return Err(LineError::FitDegenerate(
            "linearized fit gave a non-positive zero-current term".into(),
        ));
    }
    let mut f0 = 1.0 / a.sqrt();
    // u = 1 / i_star^2
    let mut u = b / a;

    let no_shift = |u: f64| u * x_max <= 1e-12;
    if no_shift(u) {
        let f0 = points.iter().map(|p| p.1).sum::<f64>() / n;
        return Ok(IstarFit {
            i_star: f64::INFINITY,
            f_center0: f0,
            residual_rms: rms(points, |_| f0),
            diagnostic: Some(
                "no downward stopband shift with current; nonlinearity not observable".into(),
            ),
        });
    }

    let cost = |f0: f64, u: f64| -> f64 {
        points
            .iter()
            .map(|&(i, f)| (f - f0 / (1.0 + u * i * i).sqrt()).powi(2))
            .sum()
    };
    let mut c = cost(f0, u);
    for _ in 0..100 {
        // Normal equations of the 2-parameter Gauss-Newton step.
        let (mut j11, mut j12, mut j22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(i, f) in points {
            let s = 1.0 + u * i * i;
            let m = f0 / s.sqrt();
            let d_f0 = 1.0 / s.sqrt();
            let d_u = -0.5 * f0 * i * i / (s * s.sqrt());
            let r = f - m;
            j11 += d_f0 * d_f0;
            j12 += d_f0 * d_u;
            j22 += d_u * d_u;
            g1 += d_f0 * r;
            g2 += d_u * r;
        }
        let det = j11 * j22 - j12 * j12;
        if det.abs() < f64::MIN_POSITIVE {
            break;
        }
        let df0 = (j22 * g1 - j12 * g2) / det;
        let du = (j11 * g2 - j12 * g1) / det;
        let mut step = 1.0;
        let mut improved = false;
        while step > 1e-6 {
            let (nf0, nu) = (f0 + step * df0, u + step * du);
            let nc = cost(nf0, nu);
            if nu > 0.0 && nc <= c {
                let rel = (c - nc) / c.max(f64::MIN_POSITIVE);
                f0 = nf0;
                u = nu;
                c = nc;
                improved = rel > 1e-15;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if no_shift(u) {
        return Ok(IstarFit {
            i_star: f64::INFINITY,
            f_center0: f0,
            residual_rms: (c / n).sqrt(),
            diagnostic: Some("fitted shift is negligible; I* unbounded".into()),
        });
    }
    Ok(IstarFit {
        i_star: 1.0 / u.sqrt(),
        f_center0: f0,
        residual_rms: (c / n).sqrt(),
        diagnostic: None,
    })
}

fn rms(points: &[(f64, f64)], model: impl Fn(f64) -> f64) -> f64 {
    let s: f64 = points.iter().map(|&(i, f)| (f - model(i)).powi(2)).sum();
    (s / points.len() as f64).sqrt()
}
