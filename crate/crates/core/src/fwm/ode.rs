use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{CmeSystem, FwmError, ToneSet};
use crate::linemodel::FilmLine;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions {
    pub rtol: f64,
    /// Absolute tolerance on amplitudes, A.
    pub atol: f64,
    /// First trial step, m. Defaults to a thousandth of the span.
    pub h_init: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-16,
            h_init: None,
            max_steps: 2_000_000,
        }
    }
}

/// Integrates the coupled-mode equations of `state` over `z_span` metres of
/// `line` and returns the tone set with the output amplitudes.
pub fn integrate(
    state: &ToneSet,
    line: &FilmLine,
    z_span: f64,
    opts: &IntegrationOptions,
) -> Result<ToneSet, FwmError> {
    integrate_observed(state, line, z_span, opts, |_, _| {})
}

/// As [`integrate`], calling `observer(z, amplitudes)` after every accepted
/// step (and once at `z = 0`). Amplitudes are in tone-set order.
pub fn integrate_observed<O>(
    state: &ToneSet,
    line: &FilmLine,
    z_span: f64,
    opts: &IntegrationOptions,
    observer: O,
) -> Result<ToneSet, FwmError>
where
    O: FnMut(f64, &[Complex64]),
{
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(FwmError::Invalid("tolerances must be positive".into()));
    }
    if !(z_span >= 0.0 && z_span.is_finite()) {
        return Err(FwmError::Invalid(format!("z_span must be >= 0, got {z_span}")));
    }
    let sys = CmeSystem::new(state, line.i_star)?;
    let y0: Vec<Complex64> = state.tones.iter().map(|t| t.amp).collect();
    let y = dopri5(|z, y, out| sys.rhs(z, y, out), &y0, z_span, opts, observer)?;
    let mut out = state.clone();
    for (t, a) in out.tones.iter_mut().zip(y) {
        t.amp = a;
    }
    Ok(out)
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive Dormand-Prince 5(4) with first-same-as-last stages.
pub(crate) fn dopri5<F, O>(
    f: F,
    y0: &[Complex64],
    z_end: f64,
    opts: &IntegrationOptions,
    mut observer: O,
) -> Result<Vec<Complex64>, FwmError>
where
    F: Fn(f64, &[Complex64], &mut [Complex64]),
    O: FnMut(f64, &[Complex64]),
{
    let n = y0.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut y = y0.to_vec();
    observer(0.0, &y);
    if z_end == 0.0 {
        return Ok(y);
    }
    let mut k = vec![vec![zero; n]; 7];
    let mut tmp = vec![zero; n];
    let mut y_new = vec![zero; n];
    let mut z = 0.0;
    let mut h = opts.h_init.unwrap_or(z_end * 1e-3).min(z_end);
    f(z, &y, &mut k[0]);
    let mut steps = 0usize;
    while z < z_end {
        if steps >= opts.max_steps {
            return Err(FwmError::TooManySteps(opts.max_steps));
        }
        steps += 1;
        let last = z + h >= z_end;
        if last {
            h = z_end - z;
        }
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    if A[s][j] != 0.0 {
                        acc += kj[i] * (h * A[s][j]);
                    }
                }
                tmp[i] = acc;
            }
            f(z + C[s] * h, &tmp, &mut k[s]);
            if s == 6 {
                y_new.copy_from_slice(&tmp);
            }
        }
        let mut err: f64 = 0.0;
        for i in 0..n {
            let mut e = zero;
            for (s, ks) in k.iter().enumerate() {
                if E[s] != 0.0 {
                    e += ks[i] * (h * E[s]);
                }
            }
            let scale = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
            err = err.max(e.norm() / scale);
        }
        if !err.is_finite() {
            return Err(FwmError::Stiff { z, h, err });
        }
        if err <= 1.0 {
            z = if last { z_end } else { z + h };
            std::mem::swap(&mut y, &mut y_new);
            // FSAL: the last stage is f(z + h, y_new).
            k.swap(0, 6);
            observer(z, &y);
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= if err <= 1.0 { factor } else { factor.min(1.0) };
        if z < z_end && h < 1e-13 * z_end.max(z.abs()) {
            return Err(FwmError::Stiff { z, h, err });
        }
    }
    Ok(y)
}
