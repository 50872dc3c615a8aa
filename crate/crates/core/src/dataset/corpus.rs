//! Fully synthetic houses for desk-scale experiments: square target
//! activations and square/triangular distractors laid out hour by hour with
//! `synthesize_aggregate`, on top of a noisy base load.

use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::splits::HouseRecording;
use super::synth::{synthesize_aggregate, SynthesisConfig};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, derived_rng, standard_normal, Rng};
use crate::series::{
    Appliance, Channel, MultivariateSeries, CANONICAL_PERIOD_S, FORM_FACTOR_CHANNEL, PHASE_SHIFT_CHANNEL,
    POWER_CHANNEL,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusParams {
    pub houses: usize,
    pub days: f64,
    /// Samples per placement block; each block holds at most one target run.
    pub block: usize,
    pub target_probability: f64,
    /// Probability of each distractor appearing in a block.
    pub distractor_p: f64,
    /// Gaussian noise on the aggregate, W.
    pub noise_w: f64,
    /// Add form-factor and phase-shift channels.
    pub hf_channels: bool,
    pub seed: u64,
}

impl Default for CorpusParams {
    fn default() -> Self {
        Self {
            houses: 2,
            days: 28.0,
            block: 400,
            target_probability: 0.7,
            distractor_p: 0.4,
            noise_w: 15.0,
            hf_channels: false,
            seed: 0,
        }
    }
}

/// Target appliance of the synthetic houses.
pub const CORPUS_TARGET: Appliance = Appliance::Kettle;

/// `(form factor, phase shift)` of each load type, mixed by power share.
const BASE_SIGNATURE: (f64, f64) = (1.15, -0.2);
const KETTLE_SIGNATURE: (f64, f64) = (1.1107, 0.0);
const MICROWAVE_SIGNATURE: (f64, f64) = (1.45, -0.35);
const FRIDGE_SIGNATURE: (f64, f64) = (1.25, -0.9);

fn square(rng: &mut Rng, power: (f64, f64), len: (usize, usize)) -> Vec<f64> {
    vec![rng.gen_range(power.0..=power.1); rng.gen_range(len.0..=len.1)]
}

fn triangle(rng: &mut Rng, peak: (f64, f64), len: (usize, usize)) -> Vec<f64> {
    let p = rng.gen_range(peak.0..=peak.1);
    let n = rng.gen_range(len.0..=len.1);
    let mid = (n - 1) as f64 / 2.0;
    (0..n)
        .map(|k| p * (1.0 - (k as f64 - mid).abs() / (mid + 1.0)))
        .collect()
}

fn kettle_pool(rng: &mut Rng) -> Vec<Vec<f64>> {
    (0..64).map(|_| square(rng, (2200.0, 3000.0), (10, 40))).collect()
}

fn microwave_pool(rng: &mut Rng) -> Vec<Vec<f64>> {
    (0..64)
        .map(|k| {
            if k % 2 == 0 {
                triangle(rng, (800.0, 1800.0), (6, 40))
            } else {
                square(rng, (900.0, 1300.0), (5, 30))
            }
        })
        .collect()
}

fn fridge_pool(rng: &mut Rng) -> Vec<Vec<f64>> {
    (0..64).map(|_| square(rng, (80.0, 150.0), (100, 300))).collect()
}

fn house(params: &CorpusParams, index: usize) -> Result<HouseRecording> {
    let seed = derive_seed(params.seed, "corpus-house", index as u64);
    let mut rng = derived_rng(seed, "pools", 0);
    let kettles = kettle_pool(&mut rng);
    let distractors = [("microwave", microwave_pool(&mut rng)), ("fridge", fridge_pool(&mut rng))];
    let base_w = rng.gen_range(100.0..300.0);

    let n = (params.days * 86_400.0 / CANONICAL_PERIOD_S).round() as usize;
    let blocks = n / params.block;
    if blocks == 0 {
        return Err(Error::InvalidArgument(format!(
            "{} days is shorter than one block of {} samples",
            params.days, params.block
        )));
    }
    let n = blocks * params.block;
    let none = SynthesisConfig {
        p: 0.0,
        distractors: Vec::new(),
        seed,
    };
    let single: Vec<SynthesisConfig> = distractors
        .iter()
        .map(|(_, pool)| SynthesisConfig {
            p: params.distractor_p,
            distractors: vec![pool.clone()],
            seed,
        })
        .collect();
    let mut target = Vec::with_capacity(n);
    let mut others: Vec<Vec<f64>> = vec![Vec::with_capacity(n); distractors.len()];
    let border = params.block / 10;
    for b in 0..blocks {
        let mut rng = derived_rng(seed, "block", b as u64);
        let act = rng
            .gen_bool(params.target_probability)
            .then(|| kettles[rng.gen_range(0..kettles.len())].as_slice());
        target.extend(synthesize_aggregate(act, &none, params.block, border, &mut rng)?.target);
        for (series, cfg) in others.iter_mut().zip(&single) {
            series.extend(synthesize_aggregate(None, cfg, params.block, border, &mut rng)?.aggregate);
        }
    }

    let mut rng = derived_rng(seed, "noise", 0);
    let mut power = Vec::with_capacity(n);
    let mut ff = Vec::with_capacity(n);
    let mut phase = Vec::with_capacity(n);
    for k in 0..n {
        let base = (base_w + params.noise_w * standard_normal(&mut rng)).max(0.0);
        let parts = [
            (base, BASE_SIGNATURE),
            (target[k], KETTLE_SIGNATURE),
            (others[0][k], MICROWAVE_SIGNATURE),
            (others[1][k], FRIDGE_SIGNATURE),
        ];
        let total: f64 = parts.iter().map(|p| p.0).sum();
        power.push(total);
        if params.hf_channels {
            let mix = |f: fn(&(f64, f64)) -> f64| {
                if total > 0.0 {
                    parts.iter().map(|(p, s)| p * f(s)).sum::<f64>() / total
                } else {
                    f(&BASE_SIGNATURE)
                }
            };
            ff.push(mix(|s| s.0) + 0.005 * standard_normal(&mut rng));
            phase.push(mix(|s| s.1) + 0.005 * standard_normal(&mut rng));
        }
    }
    let mut channels = vec![Channel {
        name: POWER_CHANNEL.into(),
        values: power,
    }];
    if params.hf_channels {
        channels.push(Channel {
            name: FORM_FACTOR_CHANNEL.into(),
            values: ff,
        });
        channels.push(Channel {
            name: PHASE_SHIFT_CHANNEL.into(),
            values: phase,
        });
    }
    let start = 1_600_000_000.0 + index as f64 * 1e7;
    let aggregate = MultivariateSeries::new(start, CANONICAL_PERIOD_S, channels)?;
    let mut submeters = BTreeMap::new();
    submeters.insert(CORPUS_TARGET.name().to_string(), target);
    for ((name, _), series) in distractors.iter().zip(others) {
        submeters.insert(name.to_string(), series);
    }
    HouseRecording::new(&format!("house_{}", index + 1), aggregate, submeters)
}

/// Houses named `house_1`, `house_2`, ... with a `kettle` target submeter
/// and `microwave`/`fridge` distractor submeters.
pub fn synthetic_corpus(params: &CorpusParams) -> Result<Vec<HouseRecording>> {
    if params.houses == 0 || params.block == 0 || !(params.days > 0.0) {
        return Err(Error::InvalidArgument("corpus needs houses, days and block > 0".into()));
    }
    if !(0.0..=1.0).contains(&params.target_probability) || !(0.0..=1.0).contains(&params.distractor_p) {
        return Err(Error::InvalidArgument("corpus probabilities must lie in [0, 1]".into()));
    }
    (0..params.houses).map(|h| house(params, h)).collect()
}
