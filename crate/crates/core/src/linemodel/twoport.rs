use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{require_positive, FilmLine, LineError, NetworkElectricals, StubPattern};

/// Chain (ABCD) matrix of a two-port at a single frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPortMatrix {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl TwoPortMatrix {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Self { a, b, c, d }
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self::new(one, zero, zero, one)
    }

    /// Lossless uniform line of impedance `z0` and electrical length `theta`.
    pub fn line_section(z0: f64, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(
            Complex64::new(c, 0.0),
            Complex64::new(0.0, z0 * s),
            Complex64::new(0.0, s / z0),
            Complex64::new(c, 0.0),
        )
    }

    pub fn shunt_admittance(y: Complex64) -> Self {
        let one = Complex64::new(1.0, 0.0);
        Self::new(one, Complex64::new(0.0, 0.0), y, one)
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    /// `(a + d) / 2`, the cosine of the Bloch phase for a reciprocal cell.
    pub fn half_trace(&self) -> Complex64 {
        (self.a + self.d) * 0.5
    }

    /// Image impedance seen at port 1, `sqrt(ab / cd)`.
    pub fn image_impedance(&self) -> Complex64 {
        ((self.a * self.b) / (self.c * self.d)).sqrt()
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::identity();
        let mut base = *self;
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                out = out * base;
            }
            base = base * base;
            e >>= 1;
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [
            (self.a - other.a).norm(),
            (self.b - other.b).norm(),
            (self.c - other.c).norm(),
            (self.d - other.d).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

impl Mul for TwoPortMatrix {
    type Output = Self;

    /// Cascade: `self` followed by `rhs`.
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.a * rhs.a + self.b * rhs.c,
            self.a * rhs.b + self.b * rhs.d,
            self.c * rhs.a + self.d * rhs.c,
            self.c * rhs.b + self.d * rhs.d,
        )
    }
}

/// Impedance and phase velocity of the bare line and of the stubs.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CellElectricals {
    pub z_bare: f64,
    pub v_bare: f64,
    pub z_stub: f64,
    pub v_stub: f64,
}

impl CellElectricals {
    pub fn resolve(line: &FilmLine, pattern: &StubPattern) -> Self {
        let n = line.electricals();
        let mut e = Self::from_network(&n);
        if line.network.is_none() {
            if let Some(z) = pattern.stub_z0 {
                e.z_stub = z;
            }
            if let Some(v) = pattern.stub_vph {
                e.v_stub = v;
            }
        }
        e
    }

    pub fn from_network(n: &NetworkElectricals) -> Self {
        Self {
            z_bare: (n.bare_l_per_m / n.bare_c_per_m).sqrt(),
            v_bare: 1.0 / (n.bare_l_per_m * n.bare_c_per_m).sqrt(),
            z_stub: (n.stub_l_per_m / n.stub_c_per_m).sqrt(),
            v_stub: 1.0 / (n.stub_l_per_m * n.stub_c_per_m).sqrt(),
        }
    }
}

/// Cell = half pitch of bare line, shunt open stub, half pitch of bare line.
pub(crate) fn cell_matrix(
    e: &CellElectricals,
    pitch: f64,
    stub_len: f64,
    omega: f64,
) -> Result<TwoPortMatrix, LineError> {
    let half = TwoPortMatrix::line_section(e.z_bare, omega / e.v_bare * 0.5 * pitch);
    if stub_len == 0.0 {
        return Ok(half * half);
    }
    let (s, c) = (omega / e.v_stub * stub_len).sin_cos();
    // Open stub: Y = j tan(beta l) / Z; a pole where cos(beta l) = 0.
    if c.abs() < 1e-12 {
        return Err(LineError::SingularFrequency {
            f: omega / (2.0 * std::f64::consts::PI),
        });
    }
    let y = Complex64::new(0.0, s / (c * e.z_stub));
    Ok(half * TwoPortMatrix::shunt_admittance(y) * half)
}

/// Chain matrix of one cell with a stub of length `stub_len` at frequency `f`.
///
/// The cell spans [`StubPattern::effective_pitch`].
pub fn unit_cell_matrix(
    line: &FilmLine,
    stub_len: f64,
    pattern: &StubPattern,
    f: f64,
) -> Result<TwoPortMatrix, LineError> {
    require_positive("frequency", f)?;
    if !(stub_len >= 0.0 && stub_len.is_finite()) {
        return Err(LineError::InvalidPattern(format!(
            "stub length must be >= 0, got {stub_len}"
        )));
    }
    line.validate()?;
    pattern.validate()?;
    let e = CellElectricals::resolve(line, pattern);
    cell_matrix(
        &e,
        pattern.effective_pitch(),
        stub_len,
        2.0 * std::f64::consts::PI * f,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::SPEED_OF_LIGHT;

    fn device_line() -> FilmLine {
        FilmLine::new(16.64e-6, 6.45e-9, 3.2e-3, 0.1)
    }

    fn device_pattern() -> StubPattern {
        StubPattern::new(2.2e-6, 10.8e-6, 2.08e-6, 122.7e-6)
    }

    #[test]
    fn zero_stub_is_one_pitch_of_bare_line() {
        let line = device_line();
        let p = device_pattern();
        let f = 6e9;
        let m = unit_cell_matrix(&line, 0.0, &p, f).unwrap();
        let beta = 2.0 * std::f64::consts::PI * f / line.phase_velocity();
        let bare = TwoPortMatrix::line_section(line.impedance(), beta * p.effective_pitch());
        assert!(m.max_abs_diff(&bare) < 1e-12);
    }

    #[test]
    fn dc_limit_is_identity() {
        let m = unit_cell_matrix(&device_line(), 10.8e-6, &device_pattern(), 1.0).unwrap();
        assert!(m.max_abs_diff(&TwoPortMatrix::identity()) < 1e-9);
        // b-entry tends to j*omega*L*pitch.
        let expected = 2.0 * std::f64::consts::PI * 16.64e-6 * device_pattern().effective_pitch();
        assert!((m.b.im - expected).abs() / expected < 1e-6);
    }

    #[test]
    fn lossless_cell_has_unit_determinant() {
        let m = unit_cell_matrix(&device_line(), 10.8e-6, &device_pattern(), 6e9).unwrap();
        assert!((m.det() - Complex64::new(1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn stub_pole_is_rejected() {
        let line = device_line();
        let p = device_pattern();
        let len = 10.8e-6;
        let f_pole = line.phase_velocity() / (4.0 * len);
        assert!(matches!(
            unit_cell_matrix(&line, len, &p, f_pole),
            Err(LineError::SingularFrequency { .. })
        ));
        // Just off the pole the entries are large but finite.
        let m = unit_cell_matrix(&line, len, &p, f_pole * (1.0 + 1e-6)).unwrap();
        assert!(m.c.norm().is_finite());
    }

    #[test]
    fn rejects_non_positive_frequency() {
        assert!(unit_cell_matrix(&device_line(), 1e-6, &device_pattern(), 0.0).is_err());
        assert!(unit_cell_matrix(&device_line(), 1e-6, &device_pattern(), -1e9).is_err());
    }

    #[test]
    fn matrix_power_matches_repeated_product() {
        let m = unit_cell_matrix(&device_line(), 9.0e-6, &device_pattern(), 11e9).unwrap();
        let mut acc = TwoPortMatrix::identity();
        for n in 0..=8u32 {
            assert!(m.pow(n).max_abs_diff(&acc) < 1e-9, "n = {n}");
            acc = acc * m;
        }
    }

    #[test]
    fn stub_override_changes_cell() {
        let mut p = device_pattern();
        let base = unit_cell_matrix(&device_line(), 10.8e-6, &p, 6e9).unwrap();
        p.stub_z0 = Some(100.0);
        p.stub_vph = Some(0.02 * SPEED_OF_LIGHT);
        let other = unit_cell_matrix(&device_line(), 10.8e-6, &p, 6e9).unwrap();
        assert!(base.max_abs_diff(&other) > 1e-6);
        assert!((other.det() - Complex64::new(1.0, 0.0)).norm() < 1e-9);
    }
}
