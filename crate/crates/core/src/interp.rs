//! Local cubic (four-point Lagrange) interpolation on sampled curves.

/// Interpolates `ys(xs)` at `x` using the four samples surrounding `x`.
///
/// `xs` must be strictly ascending and `x` must lie in `[xs[0], xs[last]]`;
/// the stencil is shifted inward near the ends. Fewer than four samples fall
/// back to the highest order available.
pub fn cubic_at(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    let n = xs.len();
    if n == 0 || n != ys.len() || !(x >= xs[0] && x <= xs[n - 1]) {
        return None;
    }
    if n == 1 {
        return Some(ys[0]);
    }
    // Interval [xs[i], xs[i+1]] containing x.
    let i = match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => return Some(ys[i]),
        Err(i) => i - 1,
    };
    let order = n.min(4);
    let lo = i.saturating_sub((order - 1) / 2).min(n - order);
    Some(lagrange(&xs[lo..lo + order], &ys[lo..lo + order], x))
}

/// Like [`cubic_at`] but extrapolates from the end stencil when `x` lies
/// outside the sampled range.
pub fn cubic_at_clamped(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    let n = xs.len();
    if n == 0 || n != ys.len() || !x.is_finite() {
        return None;
    }
    if x >= xs[0] && x <= xs[n - 1] {
        return cubic_at(xs, ys, x);
    }
    let order = n.min(4);
    let lo = if x < xs[0] { 0 } else { n - order };
    Some(lagrange(&xs[lo..lo + order], &ys[lo..lo + order], x))
}

fn lagrange(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for (j, (&xj, &yj)) in xs.iter().zip(ys).enumerate() {
        let mut w = 1.0;
        for (m, &xm) in xs.iter().enumerate() {
            if m != j {
                w *= (x - xm) / (xj - xm);
            }
        }
        acc += w * yj;
    }
    acc
}
