use serde::{Deserialize, Serialize};

use super::{added_noise_from, occupation, y_factor_nsys, NoiseChain, NoiseError, N_QM};
use crate::constants::db_to_linear;
use crate::trace::{Trace, TraceState, TraceUnit};

fn require_unit(t: &Trace, name: &str, unit: TraceUnit) -> Result<(), NoiseError> {
    if t.unit != unit {
        return Err(NoiseError::Unit {
            name: name.into(),
            expected: unit,
        });
    }
    Ok(())
}

fn require_grid(a: &Trace, a_name: &str, b: &Trace, b_name: &str) -> Result<(), NoiseError> {
    if !a.same_grid(b) {
        return Err(NoiseError::GridMismatch(a_name.into(), b_name.into()));
    }
    Ok(())
}

/// Per-side insertion loss of the device mount.
#[derive(Debug, Clone, PartialEq)]
pub struct LossEstimate {
    /// Loss per side, dB (positive for attenuation).
    pub loss_db: Trace,
    /// Power transmission per side.
    pub factor: Vec<f64>,
}

/// Half the difference between the bypass and unpumped transmissions,
/// both in dB on a common grid.
pub fn deembed_loss(bypass: &Trace, pump_off: &Trace) -> Result<LossEstimate, NoiseError> {
    require_unit(bypass, "bypass", TraceUnit::Db)?;
    require_unit(pump_off, "pump_off", TraceUnit::Db)?;
    require_grid(bypass, "bypass", pump_off, "pump_off")?;
    let values: Vec<f64> = bypass
        .values
        .iter()
        .zip(&pump_off.values)
        .map(|(b, o)| (b - o) / 2.0)
        .collect();
    let factor = values.iter().map(|&l| db_to_linear(-l)).collect();
    Ok(LossEstimate {
        loss_db: Trace::new(bypass.freq.clone(), values, TraceUnit::Db, TraceState::Derived)?,
        factor,
    })
}

/// HEMT noise from unpumped hot/cold powers.
#[derive(Debug, Clone, PartialEq)]
pub struct HemtResult {
    pub n_hemt: Trace,
    /// Bins with `Y <= 1`; their value is NaN-free but meaningless (zero).
    pub invalid: Vec<bool>,
}

impl HemtResult {
    /// Mean over valid bins.
    pub fn mean(&self) -> Option<f64> {
        let v: Vec<f64> = self
            .n_hemt
            .values
            .iter()
            .zip(&self.invalid)
            .filter(|(_, &bad)| !bad)
            .map(|(&v, _)| v)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// HEMT noise with scalar losses and load temperatures from `chain`.
pub fn hemt_noise_from_yfactor(hot: &Trace, cold: &Trace, chain: &NoiseChain) -> Result<HemtResult, NoiseError> {
    let n = hot.len();
    hemt_noise_per_bin(
        hot,
        cold,
        &vec![chain.l1; n],
        &vec![chain.l2; n],
        chain.t_hot,
        chain.t_cold,
    )
}

/// HEMT noise with frequency-resolved losses.
pub fn hemt_noise_per_bin(
    hot: &Trace,
    cold: &Trace,
    l1: &[f64],
    l2: &[f64],
    t_hot: f64,
    t_cold: f64,
) -> Result<HemtResult, NoiseError> {
    require_unit(hot, "hot", TraceUnit::Linear)?;
    require_unit(cold, "cold", TraceUnit::Linear)?;
    require_grid(hot, "hot", cold, "cold")?;
    if l1.len() != hot.len() || l2.len() != hot.len() {
        return Err(NoiseError::Domain("loss vectors do not match the trace length".into()));
    }
    let mut values = Vec::with_capacity(hot.len());
    let mut invalid = Vec::with_capacity(hot.len());
    for i in 0..hot.len() {
        let f = hot.freq[i];
        let y = hot.values[i] / cold.values[i];
        match y_factor_nsys(occupation(t_hot, f)?, occupation(t_cold, f)?, y) {
            Ok(n_sys) => {
                let l = l1[i] * l2[i];
                values.push(l * n_sys - N_QM * (1.0 - l));
                invalid.push(false);
            }
            Err(NoiseError::InvalidY { .. }) => {
                values.push(0.0);
                invalid.push(true);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(HemtResult {
        n_hemt: Trace::new(hot.freq.clone(), values, TraceUnit::Quanta, TraceState::Derived)?,
        invalid,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum HemtNoise {
    Scalar(f64),
    PerBin(Trace),
}

impl HemtNoise {
    fn at(&self, i: usize) -> f64 {
        match self {
            Self::Scalar(v) => *v,
            Self::PerBin(t) => t.values[i],
        }
    }
}

/// Measured traces for added-noise extraction. `hot` and `cold` are
/// linear powers with the device pumped; the others are in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionInputs {
    pub hot: Trace,
    pub cold: Trace,
    pub pump_off: Trace,
    pub bypass: Trace,
    /// Device gain, pumped over unpumped.
    pub gain: Trace,
    pub n_hemt: HemtNoise,
    pub t_hot: f64,
    pub t_cold: f64,
    /// Moving-average window applied to the results; 1 disables it.
    pub smooth: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinFlags {
    /// `Y <= 1`; no system noise can be inferred.
    pub invalid_y: bool,
    /// System noise below the half-quantum floor.
    pub below_floor: bool,
    /// Negative added noise.
    pub below_vacuum: bool,
}

impl BinFlags {
    pub fn any(&self) -> bool {
        self.invalid_y || self.below_floor || self.below_vacuum
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionResult {
    pub loss: LossEstimate,
    pub y: Trace,
    pub n_sys: Trace,
    pub n_a: Trace,
    pub flags: Vec<BinFlags>,
}

impl ExtractionResult {
    /// Mean added noise over unflagged bins.
    pub fn mean_n_a(&self) -> Option<f64> {
        let v: Vec<f64> = self
            .n_a
            .values
            .iter()
            .zip(&self.flags)
            .filter(|(_, fl)| !fl.invalid_y)
            .map(|(&v, _)| v)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// De-embeds the loss, forms the Y-factor and removes loss and HEMT
/// contributions bin by bin.
pub fn extract_added_noise(inp: &ExtractionInputs) -> Result<ExtractionResult, NoiseError> {
    require_unit(&inp.hot, "hot", TraceUnit::Linear)?;
    require_unit(&inp.cold, "cold", TraceUnit::Linear)?;
    require_unit(&inp.gain, "gain", TraceUnit::Db)?;
    require_grid(&inp.hot, "hot", &inp.cold, "cold")?;
    require_grid(&inp.hot, "hot", &inp.bypass, "bypass")?;
    require_grid(&inp.hot, "hot", &inp.gain, "gain")?;
    if let HemtNoise::PerBin(t) = &inp.n_hemt {
        require_unit(t, "hemt", TraceUnit::Quanta)?;
        require_grid(&inp.hot, "hot", t, "hemt")?;
    }
    if !(inp.t_cold > 0.0 && inp.t_hot > inp.t_cold) {
        return Err(NoiseError::Domain(format!(
            "need t_hot > t_cold > 0, got {} and {}",
            inp.t_hot, inp.t_cold
        )));
    }
    let loss = deembed_loss(&inp.bypass, &inp.pump_off)?;
    let n = inp.hot.len();
    let mut y = Vec::with_capacity(n);
    let mut n_sys = Vec::with_capacity(n);
    let mut n_a = Vec::with_capacity(n);
    let mut flags = vec![BinFlags::default(); n];
    for i in 0..n {
        let f = inp.hot.freq[i];
        let yi = inp.hot.values[i] / inp.cold.values[i];
        y.push(yi);
        let l = loss.factor[i];
        if !(l > 0.0 && l <= 1.0) {
            return Err(NoiseError::Domain(format!(
                "de-embedded loss factor {l} at {f} Hz is outside (0, 1]"
            )));
        }
        match y_factor_nsys(occupation(inp.t_hot, f)?, occupation(inp.t_cold, f)?, yi) {
            Ok(ns) => {
                let a = added_noise_from(ns, l, l, db_to_linear(inp.gain.values[i]), inp.n_hemt.at(i))?;
                flags[i].below_floor = ns < N_QM;
                flags[i].below_vacuum = a.below_vacuum;
                n_sys.push(ns);
                n_a.push(a.n_a);
            }
            Err(NoiseError::InvalidY { .. }) => {
                flags[i].invalid_y = true;
                n_sys.push(0.0);
                n_a.push(0.0);
            }
            Err(e) => return Err(e),
        }
    }
    let w = inp.smooth.max(1);
    let freq = inp.hot.freq.clone();
    Ok(ExtractionResult {
        loss,
        y: Trace::new(freq.clone(), y, TraceUnit::Linear, TraceState::Derived)?,
        n_sys: Trace::new(freq.clone(), moving_average(&n_sys, w), TraceUnit::Quanta, TraceState::Derived)?,
        n_a: Trace::new(freq, moving_average(&n_a, w), TraceUnit::Quanta, TraceState::Derived)?,
        flags,
    })
}

/// Centred moving average; the window shrinks at the ends.
pub fn moving_average(v: &[f64], width: usize) -> Vec<f64> {
    if width <= 1 {
        return v.to_vec();
    }
    let half = width / 2;
    (0..v.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + width - half).min(v.len());
            v[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}
