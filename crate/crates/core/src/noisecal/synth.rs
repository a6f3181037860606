use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{cascade_forward, NoiseChain, NoiseError, PumpState};
use crate::constants::linear_to_db;
use crate::trace::{Trace, TraceState, TraceUnit};

/// Simulated analyzer and network-analyzer traces for one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthTraces {
    pub hot: Trace,
    pub cold: Trace,
    pub hot_off: Trace,
    pub cold_off: Trace,
    pub pump_off: Trace,
    pub bypass: Trace,
    pub gain: Trace,
}

impl SynthTraces {
    /// `(file stem, trace)` pairs.
    pub fn named(&self) -> [(&'static str, &Trace); 7] {
        [
            ("hot", &self.hot),
            ("cold", &self.cold),
            ("hot_off", &self.hot_off),
            ("cold_off", &self.cold_off),
            ("pump_off", &self.pump_off),
            ("bypass", &self.bypass),
            ("gain", &self.gain),
        ]
    }
}

/// Forward-models every trace of a Y-factor measurement on `freq_grid`.
///
/// Each linear quantity is multiplied by `1 + noise_rel * n` with `n`
/// standard normal drawn from a ChaCha stream seeded by `seed`. dB traces
/// receive the same relative noise on their linear value.
pub fn synth_measurement(
    chain: &NoiseChain,
    freq_grid: &[f64],
    seed: u64,
    noise_rel: f64,
) -> Result<SynthTraces, NoiseError> {
    chain.validate()?;
    if !(0.0..0.2).contains(&noise_rel) {
        return Err(NoiseError::Domain(format!(
            "relative noise must lie in [0, 0.2), got {noise_rel}"
        )));
    }
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter = |x: f64| x * (1.0 + noise_rel * normal.sample(&mut rng));
    let n = freq_grid.len();
    let mut cols: [Vec<f64>; 7] = Default::default();
    let through = chain.g_w * chain.g_hemt;
    for &f in freq_grid {
        let row = [
            cascade_forward(chain, chain.t_hot, f, PumpState::On)?,
            cascade_forward(chain, chain.t_cold, f, PumpState::On)?,
            cascade_forward(chain, chain.t_hot, f, PumpState::Off)?,
            cascade_forward(chain, chain.t_cold, f, PumpState::Off)?,
            through * chain.l1 * chain.l2,
            through,
            chain.g_pa,
        ];
        for (c, v) in cols.iter_mut().zip(row) {
            c.push(jitter(v));
        }
    }
    debug_assert!(cols.iter().all(|c| c.len() == n));
    let [hot, cold, hot_off, cold_off, pump_off, bypass, gain] = cols;
    let lin = |v: Vec<f64>, s| Trace::new(freq_grid.to_vec(), v, TraceUnit::Linear, s);
    let db = |v: Vec<f64>, s| {
        Trace::new(
            freq_grid.to_vec(),
            v.into_iter().map(linear_to_db).collect(),
            TraceUnit::Db,
            s,
        )
    };
    Ok(SynthTraces {
        hot: lin(hot, TraceState::Hot)?,
        cold: lin(cold, TraceState::Cold)?,
        hot_off: lin(hot_off, TraceState::Hot)?,
        cold_off: lin(cold_off, TraceState::Cold)?,
        pump_off: db(pump_off, TraceState::PumpOff)?,
        bypass: db(bypass, TraceState::Bypass)?,
        gain: db(gain, TraceState::PumpOn)?,
    })
}
