use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use super::twoport::{cell_matrix, CellElectricals};
use super::{require_positive, FilmLine, LineError, StubPattern, TwoPortMatrix};
use crate::constants::SPEED_OF_LIGHT;
use crate::interp::cubic_at_clamped;
use crate::trace::{fmt_freq, fmt_value};

/// `|cos(kD)|` must exceed `1 + STOPBAND_EPS` for a point to count as
/// evanescent; absorbs rounding in the chain-matrix product.
pub const STOPBAND_EPS: f64 = 1e-12;

/// Errors from looking up a wavevector in a [`DispersionTable`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LookupError {
    #[error("{f} Hz lies inside the stopband {low}..{high} Hz")]
    Evanescent { f: f64, low: f64, high: f64 },
    #[error("{f} Hz is outside the dispersion table ({min}..{max} Hz)")]
    OutOfRange { f: f64, min: f64, max: f64 },
}

/// Bloch propagation constant of the loaded line over a frequency grid.
#[derive(Debug, Clone)]
pub struct DispersionTable {
    pub freq: Vec<f64>,
    /// Bloch wavevector, rad/m; `Im k >= 0` is the attenuation inside a stopband.
    pub k: Vec<Complex64>,
    /// `cos(kD)` = half trace of the supercell matrix.
    pub cos_kd: Vec<f64>,
    /// Refined stopband edges, Hz, ascending.
    pub stopbands: Vec<(f64, f64)>,
    /// Supercell length D, m.
    pub period: f64,
    re_k: Vec<f64>,
    /// Index ranges `[start, end)` of contiguous passband samples.
    segments: Vec<(usize, usize)>,
}

impl DispersionTable {
    pub fn len(&self) -> usize {
        self.freq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freq.is_empty()
    }

    pub fn re_k(&self) -> &[f64] {
        &self.re_k
    }

    pub fn in_stopband_at(&self, idx: usize) -> bool {
        self.cos_kd[idx].abs() > 1.0 + STOPBAND_EPS
    }

    pub fn stopband_containing(&self, f: f64) -> Option<(f64, f64)> {
        self.stopbands
            .iter()
            .copied()
            .find(|&(lo, hi)| f > lo && f < hi)
    }

    pub fn is_evanescent(&self, f: f64) -> bool {
        self.stopband_containing(f).is_some()
    }

    /// First stopband whose centre lies above `f`.
    pub fn first_stopband_above(&self, f: f64) -> Option<(f64, f64)> {
        self.stopbands
            .iter()
            .copied()
            .find(|&(lo, hi)| 0.5 * (lo + hi) > f)
    }

    pub fn first_stopband(&self) -> Option<(f64, f64)> {
        self.stopbands.first().copied()
    }

    /// Real part of the Bloch wavevector at `f`, interpolated with a local
    /// cubic inside the passband that contains `f`.
    pub fn kappa(&self, f: f64) -> Result<f64, LookupError> {
        let (min, max) = (self.freq[0], *self.freq.last().unwrap());
        if !(f >= min && f <= max) {
            return Err(LookupError::OutOfRange { f, min, max });
        }
        if let Some((low, high)) = self.stopband_containing(f) {
            return Err(LookupError::Evanescent { f, low, high });
        }
        // Passband segment whose span, widened to the neighbouring stopband
        // edges, contains f.
        let seg = self
            .segments
            .iter()
            .find(|&&(s, e)| {
                let lo = self.edge_below(s);
                let hi = self.edge_above(e - 1);
                f >= lo && f <= hi
            })
            .copied();
        match seg {
            Some((s, e)) => Ok(cubic_at_clamped(&self.freq[s..e], &self.re_k[s..e], f)
                .expect("segment is non-empty")),
            // f sits exactly on a refined edge that has no passband sample.
            None => Err(LookupError::Evanescent { f, low: f, high: f }),
        }
    }

    fn edge_below(&self, idx: usize) -> f64 {
        let f = self.freq[idx];
        self.stopbands
            .iter()
            .rev()
            .find(|&&(_, hi)| hi <= f)
            .map(|&(_, hi)| hi)
            .unwrap_or(f)
    }

    fn edge_above(&self, idx: usize) -> f64 {
        let f = self.freq[idx];
        self.stopbands
            .iter()
            .find(|&&(lo, _)| lo >= f)
            .map(|&(lo, _)| lo)
            .unwrap_or(f)
    }

    /// `k / f` at the lowest grid frequency, rad/(m Hz); the "linear part"
    /// subtracted in dispersion plots.
    pub fn low_frequency_slope(&self) -> f64 {
        self.re_k[0] / self.freq[0]
    }

    /// Phase velocity `2 pi f / Re k` at the lowest grid frequency.
    pub fn low_frequency_velocity(&self) -> f64 {
        2.0 * PI / self.low_frequency_slope()
    }

    /// Effective refractive index `c Re k / omega` of the equivalent uniform
    /// medium at `f`.
    pub fn effective_index(&self, f: f64) -> Result<f64, LookupError> {
        Ok(SPEED_OF_LIGHT * self.kappa(f)? / (2.0 * PI * f))
    }

    /// Effective relative permittivity, the square of [`Self::effective_index`].
    pub fn effective_permittivity(&self, f: f64) -> Result<f64, LookupError> {
        self.effective_index(f).map(|n| n * n)
    }

    /// Writes `f_Hz,re_k,im_k,in_stopband`, plus `re_k_minus_linear` when
    /// `subtract_linear` is set.
    pub fn write_csv<W: Write>(&self, mut w: W, subtract_linear: bool) -> io::Result<()> {
        let slope = self.low_frequency_slope();
        if subtract_linear {
            writeln!(w, "f_Hz,re_k,im_k,in_stopband,re_k_minus_linear")?;
        } else {
            writeln!(w, "f_Hz,re_k,im_k,in_stopband")?;
        }
        for (i, (&f, k)) in self.freq.iter().zip(&self.k).enumerate() {
            write!(
                w,
                "{},{},{},{}",
                fmt_freq(f),
                fmt_value(k.re),
                fmt_value(k.im),
                u8::from(self.in_stopband_at(i))
            )?;
            if subtract_linear {
                write!(w, ",{}", fmt_value(k.re - slope * f))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Chain matrix of one full modulation period at `f`.
pub fn supercell_matrix(
    line: &FilmLine,
    pattern: &StubPattern,
    f: f64,
) -> Result<TwoPortMatrix, LineError> {
    require_positive("frequency", f)?;
    line.validate()?;
    pattern.validate()?;
    let e = CellElectricals::resolve(line, pattern);
    let lens = pattern.stub_lengths();
    product(&e, pattern.effective_pitch(), &lens, 2.0 * PI * f)
}

fn product(
    e: &CellElectricals,
    pitch: f64,
    lens: &[f64],
    omega: f64,
) -> Result<TwoPortMatrix, LineError> {
    lens.iter().try_fold(TwoPortMatrix::identity(), |acc, &l| {
        Ok(acc * cell_matrix(e, pitch, l, omega)?)
    })
}

/// Floquet-Bloch dispersion of the stub-loaded line over `freq_grid`.
///
/// The supercell is one modulation period. `cos(kD) = (a + d) / 2`; the
/// branch of `Re k` is unwrapped continuously from DC so that it never
/// decreases, and stopbands are the maximal runs where `|cos(kD)| > 1`,
/// with edges refined by bisection.
pub fn supercell_bloch(
    line: &FilmLine,
    pattern: &StubPattern,
    freq_grid: &[f64],
) -> Result<DispersionTable, LineError> {
    if freq_grid.is_empty() {
        return Err(LineError::EmptyGrid);
    }
    line.validate()?;
    pattern.validate()?;
    for w in freq_grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(LineError::InvalidPattern(
                "frequency grid must be strictly ascending".into(),
            ));
        }
    }
    require_positive("frequency", freq_grid[0])?;

    let e = CellElectricals::resolve(line, pattern);
    let lens = pattern.stub_lengths();
    let pitch = pattern.effective_pitch();
    let period = pattern.supercell_length();
    let half_trace = |f: f64| -> Result<f64, LineError> {
        Ok(product(&e, pitch, &lens, 2.0 * PI * f)?.half_trace().re)
    };

    let cos_kd: Vec<f64> = freq_grid
        .par_iter()
        .map(|&f| half_trace(f))
        .collect::<Result<_, _>>()?;

    let phases = unwrap_bloch_phase(&cos_kd);
    let k: Vec<Complex64> = phases
        .iter()
        .map(|&(re, im)| Complex64::new(re / period, im / period))
        .collect();
    let re_k = k.iter().map(|k| k.re).collect();

    let inside = |h: f64| h.abs() > 1.0 + STOPBAND_EPS;
    let mut stopbands = Vec::new();
    let mut segments = Vec::new();
    let n = freq_grid.len();
    let mut i = 0;
    while i < n {
        let start = i;
        let gap = inside(cos_kd[i]);
        while i < n && inside(cos_kd[i]) == gap {
            i += 1;
        }
        if !gap {
            segments.push((start, i));
            continue;
        }
        let low = if start == 0 {
            freq_grid[0]
        } else {
            refine_edge(&half_trace, freq_grid[start - 1], freq_grid[start])?
        };
        let high = if i == n {
            freq_grid[n - 1]
        } else {
            refine_edge(&half_trace, freq_grid[i], freq_grid[i - 1])?
        };
        stopbands.push((low, high));
    }

    Ok(DispersionTable {
        freq: freq_grid.to_vec(),
        k,
        cos_kd,
        stopbands,
        period,
        re_k,
        segments,
    })
}

/// Bisects between a passband frequency and a stopband frequency to 1 Hz.
fn refine_edge<F>(half_trace: &F, mut pass: f64, mut stop: f64) -> Result<f64, LineError>
where
    F: Fn(f64) -> Result<f64, LineError>,
{
    for _ in 0..64 {
        if (stop - pass).abs() <= 1.0 {
            break;
        }
        let mid = 0.5 * (pass + stop);
        if half_trace(mid)?.abs() > 1.0 + STOPBAND_EPS {
            stop = mid;
        } else {
            pass = mid;
        }
    }
    Ok(0.5 * (pass + stop))
}

/// Unwraps `kD` from `cos(kD)` samples. Returns `(Re kD, Im kD)` per sample.
///
/// In passbands the candidate `2 pi m +- acos(h)` not below the previous
/// value and closest to a linear prediction is taken; inside stopbands
/// `Re kD` sits on the multiple of pi fixed by the sign of `h`.
pub(crate) fn unwrap_bloch_phase(cos_kd: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(cos_kd.len());
    let mut prev = 0.0f64;
    let mut prev2: Option<f64> = None;
    for &h in cos_kd {
        let tol = 1e-9 * prev.max(1.0);
        let (re, im) = if h.abs() <= 1.0 + STOPBAND_EPS {
            let theta = h.clamp(-1.0, 1.0).acos();
            let predicted = prev2.map_or(prev, |p2| 2.0 * prev - p2);
            let base = (prev / (2.0 * PI)).floor() as i64;
            let mut best = f64::NAN;
            for m in (base - 1)..=(base + 2) {
                for cand in [2.0 * PI * m as f64 + theta, 2.0 * PI * m as f64 - theta] {
                    if cand >= prev - tol
                        && (best.is_nan() || (cand - predicted).abs() < (best - predicted).abs())
                    {
                        best = cand;
                    }
                }
            }
            (best.max(prev), 0.0)
        } else {
            // Even multiples of pi for h > 1, odd for h < -1.
            let odd = h < 0.0;
            let mut m = (prev / PI).floor() as i64;
            if m < 0 {
                m = 0;
            }
            if (m % 2 == 1) != odd {
                m += 1;
            }
            let mut re = m as f64 * PI;
            if re < prev - tol {
                re += 2.0 * PI;
            }
            (re, h.abs().acosh())
        };
        prev2 = Some(prev);
        prev = re;
        out.push((re, im));
    }
    out
}
