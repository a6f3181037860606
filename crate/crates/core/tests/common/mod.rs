#![allow(dead_code)]

use std::sync::OnceLock;

use kitwpa_core::{DispersionTable, Preset};
use num_complex::Complex64;

pub fn preset() -> &'static Preset {
    static P: OnceLock<Preset> = OnceLock::new();
    P.get_or_init(Preset::nbtin_4to8)
}

/// Preset dispersion on the wide mixing grid.
pub fn table() -> &'static DispersionTable {
    static T: OnceLock<DispersionTable> = OnceLock::new();
    T.get_or_init(|| preset().mixing_dispersion().unwrap())
}

/// Undepleted-pump parametric signal gain (linear power).
///
/// `gs, gi, gp` are the per-tone Kerr coefficients (1/(A^2 m)), `p` the pump
/// intensity |A_p|^2, `dbeta = k_s + k_i - 2 k_p` and `l` the length.
pub fn closed_form_gain(gs: f64, gi: f64, gp: f64, p: f64, dbeta: f64, l: f64) -> f64 {
    let kappa = dbeta + 2.0 * (gs + gi - gp) * p;
    let c2 = gs * gi * p * p;
    let g2 = c2 - kappa * kappa / 4.0;
    let s = if g2 > 0.0 {
        let g = g2.sqrt();
        (g * l).sinh() / g
    } else if g2 < 0.0 {
        let g = (-g2).sqrt();
        (g * l).sin() / g
    } else {
        l
    };
    1.0 + c2 * s * s
}

/// Eigenvalues of a 2x2 complex matrix from its characteristic polynomial.
pub fn eig2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> (Complex64, Complex64) {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr - det * 4.0).sqrt();
    ((tr + disc) / 2.0, (tr - disc) / 2.0)
}

/// Forward transmission of a line with reflecting ends, summed path by path:
/// `t^2 g e^{-ikL} sum_n (r^2 g e^{-ikL})^n`.
pub fn multipath_s21(r: f64, t: f64, g: f64, kl: f64, terms: usize) -> Complex64 {
    let hop = Complex64::cis(-kl);
    let loop_ = hop * (r * r * g);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut term = hop * (t * t * g);
    for _ in 0..terms {
        acc += term;
        term *= loop_;
    }
    acc
}

pub fn db(x: f64) -> f64 {
    10.0 * x.log10()
}
