use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{FwmError, ToneRole, ToneSet};

/// Frequencies within this many Hz count as equal when matching products.
const FREQ_MATCH_HZ: f64 = 1.0;

/// One cubic product driving tone `target`:
/// `i gamma_target coef F0 F1 F2 exp(i dk z)`, where `Fn` is the amplitude
/// of tone `factors[n].0`, conjugated when `factors[n].1` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingTerm {
    pub target: usize,
    pub coef: f64,
    pub factors: [(usize, bool); 3],
    /// Residual wavevector `sum(sign k) - k_target`, rad/m.
    pub dk: f64,
}

impl MixingTerm {
    /// Pure phase modulation: the product reduces to `|A_m|^2 A_target`.
    pub fn is_phase_modulation(&self) -> bool {
        reduced(&self.factors) == vec![(self.target, false)]
    }
}

/// Coupled-mode system for a tone set.
///
/// Tone `j` couples with `gamma_j = k_p w_j / (8 w_p i_star^2)`. Each term
/// is weighted by the number of ordered signed triples producing it over 3,
/// so self-phase modulation enters as `gamma_j |A_j|^2`, cross-phase as
/// `2 gamma_j |A_m|^2` and pair production as `gamma_s A_p^2 A_i^*`.
#[derive(Debug, Clone)]
pub struct CmeSystem {
    pub freq: Vec<f64>,
    pub k: Vec<f64>,
    pub gamma: Vec<f64>,
    pub terms: Vec<MixingTerm>,
}

impl CmeSystem {
    pub fn new(set: &ToneSet, i_star: f64) -> Result<Self, FwmError> {
        if !(i_star > 0.0 && i_star.is_finite()) {
            return Err(FwmError::Invalid(format!("i_star must be positive, got {i_star}")));
        }
        let pump = set
            .tones
            .iter()
            .find(|t| t.role == ToneRole::Pump && !t.evanescent)
            .ok_or_else(|| FwmError::Invalid("tone set has no propagating pump".into()))?;
        let g0 = pump.k / (8.0 * i_star * i_star * pump.f);
        let freq: Vec<f64> = set.tones.iter().map(|t| t.f).collect();
        let k: Vec<f64> = set.tones.iter().map(|t| t.k).collect();
        let live: Vec<usize> = (0..set.tones.len())
            .filter(|&j| !set.tones[j].evanescent)
            .collect();
        let gamma = set
            .tones
            .iter()
            .map(|t| if t.evanescent { 0.0 } else { g0 * t.f })
            .collect();

        let signed: Vec<(usize, bool)> = live.iter().flat_map(|&m| [(m, false), (m, true)]).collect();
        let value = |&(m, conj): &(usize, bool)| if conj { -freq[m] } else { freq[m] };
        let wave = |&(m, conj): &(usize, bool)| if conj { -k[m] } else { k[m] };
        let mut terms = Vec::new();
        for &j in &live {
            let mut counts: BTreeMap<[(usize, bool); 3], usize> = BTreeMap::new();
            for x in &signed {
                for y in &signed {
                    for z in &signed {
                        let sum = value(x) + value(y) + value(z);
                        if (sum - freq[j]).abs() < FREQ_MATCH_HZ {
                            let mut key = [*x, *y, *z];
                            key.sort();
                            *counts.entry(key).or_default() += 1;
                        }
                    }
                }
            }
            for (factors, count) in counts {
                let dk = if reduced(&factors) == vec![(j, false)] {
                    0.0
                } else {
                    factors.iter().map(wave).sum::<f64>() - k[j]
                };
                terms.push(MixingTerm {
                    target: j,
                    coef: count as f64 / 3.0,
                    factors,
                    dk,
                });
            }
        }
        Ok(Self {
            freq,
            k,
            gamma,
            terms,
        })
    }

    pub fn len(&self) -> usize {
        self.freq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freq.is_empty()
    }

    pub fn terms_for(&self, target: usize) -> impl Iterator<Item = &MixingTerm> {
        self.terms.iter().filter(move |t| t.target == target)
    }

    /// `dA/dz` at position `z`, written into `out`.
    pub fn rhs(&self, z: f64, a: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for t in &self.terms {
            let mut p = Complex64::new(t.coef, 0.0);
            for &(m, conj) in &t.factors {
                p *= if conj { a[m].conj() } else { a[m] };
            }
            if t.dk != 0.0 {
                p *= Complex64::cis(t.dk * z);
            }
            out[t.target] += p;
        }
        for (o, g) in out.iter_mut().zip(&self.gamma) {
            *o *= Complex64::new(0.0, *g);
        }
    }
}

/// Cancels `+m`/`-m` pairs in a signed triple.
fn reduced(factors: &[(usize, bool); 3]) -> Vec<(usize, bool)> {
    let mut left: Vec<(usize, bool)> = factors.to_vec();
    let mut i = 0;
    while i < left.len() {
        let (m, c) = left[i];
        if let Some(j) = left.iter().position(|&(n, d)| n == m && d != c) {
            let (hi, lo) = if i > j { (i, j) } else { (j, i) };
            left.remove(hi);
            left.remove(lo);
            i = 0;
        } else {
            i += 1;
        }
    }
    left
}

/// `dA/dz` for every tone of `state` at `z` (zero for evanescent tones).
pub fn cme_rhs(state: &ToneSet, i_star: f64, z: f64) -> Result<Vec<Complex64>, FwmError> {
    let sys = CmeSystem::new(state, i_star)?;
    let a: Vec<Complex64> = state.tones.iter().map(|t| t.amp).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); a.len()];
    sys.rhs(z, &a, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fwm::{build_tone_set, ToneMode};
    use crate::grid::FrequencyGrid;
    use crate::linemodel::DispersionTable;
    use crate::presets::Preset;

    fn table() -> DispersionTable {
        Preset::nbtin_4to8()
            .dispersion_on(&FrequencyGrid::new(1e9, 45e9, 10e6))
            .unwrap()
    }

    #[test]
    fn three_tone_terms_are_textbook_set() {
        let set = build_tone_set(10.6e9, 6e9, &table(), ToneMode::Three).unwrap();
        let sys = CmeSystem::new(&set, 3.2e-3).unwrap();
        let (p, s, i) = (0, 1, 2);
        let mut expected: Vec<(usize, [(usize, bool); 3], f64)> = Vec::new();
        for j in [p, s, i] {
            // SPM
            let mut key = [(j, false), (j, false), (j, true)];
            key.sort();
            expected.push((j, key, 1.0));
            // XPM
            for m in [p, s, i].into_iter().filter(|&m| m != j) {
                let mut key = [(j, false), (m, false), (m, true)];
                key.sort();
                expected.push((j, key, 2.0));
            }
        }
        expected.push((p, [(p, true), (s, false), (i, false)], 2.0));
        expected.push((s, [(p, false), (p, false), (i, true)], 1.0));
        expected.push((i, [(p, false), (p, false), (s, true)], 1.0));
        let mut got: Vec<_> = sys.terms.iter().map(|t| (t.target, t.factors, t.coef)).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got, expected);
    }

    #[test]
    fn six_tone_includes_harmonic_generation() {
        let set = build_tone_set(10.6e9, 6e9, &table(), ToneMode::Six).unwrap();
        let sys = CmeSystem::new(&set, 3.2e-3).unwrap();
        let h3 = set.index_of("3p").unwrap();
        assert!(sys
            .terms_for(h3)
            .any(|t| t.factors == [(0, false); 3] && (t.coef - 1.0 / 3.0).abs() < 1e-15));
        let h4 = set.index_of("4p-s").unwrap();
        assert!(sys.terms_for(h4).any(|t| t.factors == [(0, false), (0, false), (2, false)]));
    }

    #[test]
    fn pump_only_rotates_by_spm() {
        let mut set = build_tone_set(10.6e9, 6e9, &table(), ToneMode::Three).unwrap();
        let ip = 380e-6;
        set.set_amp(ToneRole::Pump, Complex64::new(ip, 0.0));
        let d = cme_rhs(&set, 3.2e-3, 0.0).unwrap();
        let sys = CmeSystem::new(&set, 3.2e-3).unwrap();
        let expected = Complex64::new(0.0, sys.gamma[0] * ip * ip * ip);
        assert!((d[0] - expected).norm() < 1e-15 * expected.norm());
        assert_eq!(d[1], Complex64::new(0.0, 0.0));
        assert_eq!(d[2], Complex64::new(0.0, 0.0));
        // Tangent to the circle: |A_p| does not change.
        assert!((d[0].conj() * set.tones[0].amp).re.abs() < 1e-30);
    }

    #[test]
    fn nonlinear_mismatch_matches_residual_normalization() {
        let set = build_tone_set(10.6e9, 6e9, &table(), ToneMode::Three).unwrap();
        let sys = CmeSystem::new(&set, 3.2e-3).unwrap();
        let ip = 380e-6f64;
        let p2 = ip * ip;
        // Signal and idler XPM minus twice the pump SPM.
        let mismatch = (2.0 * sys.gamma[1] + 2.0 * sys.gamma[2] - 2.0 * sys.gamma[0]) * p2;
        let eq = set.tones[0].k * p2 / (4.0 * 3.2e-3 * 3.2e-3);
        assert!((mismatch / eq - 1.0).abs() < 1e-12);
        assert!((2.0 * sys.gamma[0] * p2 / eq - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_modulation_terms_have_zero_dk() {
        let set = build_tone_set(10.6e9, 6e9, &table(), ToneMode::Six).unwrap();
        let sys = CmeSystem::new(&set, 3.2e-3).unwrap();
        let n_pm = sys.terms.iter().filter(|t| t.is_phase_modulation()).count();
        // One SPM and five XPM terms per tone.
        assert_eq!(n_pm, 6 * 6);
    }
}
