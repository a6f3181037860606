use serde::{Deserialize, Serialize};

/// Uniform frequency grid description, `start..=stop` in steps of `step` (Hz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl FrequencyGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Self {
        Self { start, stop, step }
    }

    /// 0.1 to 20 GHz at 1 MHz.
    pub fn default_dispersion() -> Self {
        Self::new(0.1e9, 20e9, 1e6)
    }

    /// 0.1 to 45 GHz at 1 MHz: wide enough for six-tone products of a pump
    /// near 11 GHz.
    pub fn mixing() -> Self {
        Self::new(0.1e9, 45e9, 1e6)
    }

    pub fn is_valid(&self) -> bool {
        self.start.is_finite()
            && self.stop.is_finite()
            && self.step.is_finite()
            && self.start > 0.0
            && self.step > 0.0
            && self.stop >= self.start
    }

    pub fn len(&self) -> usize {
        if !self.is_valid() {
            return 0;
        }
        // Tolerate the stop point being off by rounding.
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Points are computed as `start + n * step` so the grid does not drift.
    pub fn points(&self) -> Vec<f64> {
        (0..self.len())
            .map(|n| self.start + n as f64 * self.step)
            .collect()
    }
}

/// `n` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
