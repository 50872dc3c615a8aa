//! Train / validation / test I / test II construction.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::activation::{
    count_non_activation_offsets, extract_activations, placement_range, sample_non_activation, Activation,
    ActivationParams,
};
use super::norm::{compute_norm_stats, NormStats};
use super::synth::{synthesize_aggregate, SynthesisConfig};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, derived_rng, rng_from};
use crate::series::{Appliance, MultivariateSeries, PowerSeries, POWER_CHANNEL};

const SECONDS_PER_DAY: f64 = 86_400.0;

/// One contiguous recording of a house: the aggregate (power and possibly
/// descriptor channels) and submeter power on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HouseRecording {
    pub house: String,
    pub aggregate: MultivariateSeries,
    pub submeters: BTreeMap<String, Vec<f64>>,
}

impl HouseRecording {
    pub fn new(house: &str, aggregate: MultivariateSeries, submeters: BTreeMap<String, Vec<f64>>) -> Result<Self> {
        for (name, values) in &submeters {
            if values.len() != aggregate.len() {
                return Err(Error::LengthMismatch {
                    left: aggregate.len(),
                    right: values.len(),
                });
            }
            if let Some(k) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("sample {k} of submeter {name}")));
            }
        }
        Ok(Self {
            house: house.to_string(),
            aggregate,
            submeters,
        })
    }

    pub fn end_time(&self) -> f64 {
        self.aggregate.time_at(self.aggregate.len())
    }
}

/// A model input window with its targets. Values are in physical units;
/// normalization is applied when batches are assembled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Time-major, `W·C` values.
    pub input: Vec<f64>,
    /// Target appliance power over the window: the activation, zero elsewhere.
    pub target: Vec<f64>,
    /// Window-relative `[start, end)` of the contained activation.
    pub span: Option<(usize, usize)>,
    pub synthetic: bool,
}

impl Sample {
    /// Whether the window contains a whole activation.
    pub fn label(&self) -> bool {
        self.span.is_some()
    }

    /// `(start / W, end / W, mean power in W)`; zeros when there is no
    /// activation.
    pub fn rectangle(&self) -> [f64; 3] {
        let w = self.target.len() as f64;
        match self.span {
            Some((s, e)) if e > s => {
                let mean = self.target[s..e].iter().sum::<f64>() / (e - s) as f64;
                [s as f64 / w, e as f64 / w, mean]
            }
            _ => [0.0, 0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentParams {
    /// Distractor probability.
    pub p: f64,
    /// Synthetic samples added per real training sample.
    pub ratio: f64,
}

impl Default for AugmentParams {
    fn default() -> Self {
        Self { p: 0.4, ratio: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildParams {
    pub appliance: Appliance,
    pub activation: ActivationParams,
    pub window: usize,
    /// Aggregate channels fed to the model, in order.
    pub channels: Vec<String>,
    pub test_house: String,
    pub test_ii_days: f64,
    pub train_fraction: f64,
    pub seed: u64,
    pub augment: Option<AugmentParams>,
}

impl BuildParams {
    pub fn new(appliance: Appliance, window: usize, test_house: &str, seed: u64) -> Self {
        Self {
            appliance,
            activation: ActivationParams::for_appliance(appliance),
            window,
            channels: vec![POWER_CHANNEL.to_string()],
            test_house: test_house.to_string(),
            test_ii_days: 14.0,
            train_fraction: 0.8,
            seed,
            augment: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    /// Source of both the training and the validation samples.
    TrainVal,
    TestI,
    TestII,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeRange {
    pub split: SplitKind,
    pub house: String,
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test_i: usize,
    pub test_ii: usize,
    pub synthetic: usize,
    /// Activations that could not be placed in a window.
    pub skipped_activations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub params: BuildParams,
    pub houses: Vec<String>,
    pub ranges: Vec<TimeRange>,
    pub norm: NormStats,
    /// Mean activation length over train and validation, in samples.
    pub mean_activation_len: f64,
    pub counts: SplitCounts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub info: DatasetInfo,
    pub train: Vec<Sample>,
    pub val: Vec<Sample>,
    pub test_i: Vec<Sample>,
    pub test_ii: Vec<Sample>,
}

/// A slice `[from, to)` of one recording, with the chosen input channels.
struct Segment<'a> {
    rec: &'a HouseRecording,
    input: MultivariateSeries,
    submeter: PowerSeries,
}

impl<'a> Segment<'a> {
    fn new(rec: &'a HouseRecording, from: usize, to: usize, params: &BuildParams) -> Result<Self> {
        let names: Vec<&str> = params.channels.iter().map(String::as_str).collect();
        let input = rec.aggregate.select(&names)?.sub_series(from, to)?;
        let key = params.appliance.name();
        let meter = rec
            .submeters
            .get(key)
            .ok_or_else(|| Error::InvalidArgument(format!("house {} has no `{key}` submeter", rec.house)))?;
        let submeter = PowerSeries::new(rec.aggregate.time_at(from), rec.aggregate.period, meter[from..to].to_vec())?;
        Ok(Self { rec, input, submeter })
    }

    fn range(&self, split: SplitKind) -> TimeRange {
        TimeRange {
            split,
            house: self.rec.house.clone(),
            start_s: self.input.start_time,
            end_s: self.input.time_at(self.input.len()),
        }
    }
}

struct Windows {
    samples: Vec<Sample>,
    skipped: usize,
}

/// One positive window per placeable activation and as many activation-free
/// windows, drawn uniformly over all segments.
fn balanced_windows(segments: &[Segment], params: &BuildParams, tag: &str) -> Result<Windows> {
    let w = params.window;
    let per_segment: Vec<Vec<Activation>> = segments
        .iter()
        .map(|s| extract_activations(&s.submeter, &params.activation, &s.rec.house))
        .collect();
    let mut jobs = Vec::new();
    let mut skipped = 0;
    for (si, acts) in per_segment.iter().enumerate() {
        for a in acts {
            match placement_range(a.start, a.end, segments[si].input.len(), w, params.activation.border) {
                Some(range) => jobs.push((si, a, range)),
                None => skipped += 1,
            }
        }
    }
    let positives = jobs
        .par_iter()
        .enumerate()
        .map(|(k, &(si, a, (lo, hi)))| {
            let mut rng = derived_rng(params.seed, &format!("{tag}-positive"), k as u64);
            let offset = rng.gen_range(lo..=hi);
            let mut target = vec![0.0; w];
            target[a.start - offset..a.end - offset].copy_from_slice(&a.power);
            Ok(Sample {
                input: segments[si].input.interleaved_window(offset, w)?,
                target,
                span: Some((a.start - offset, a.end - offset)),
                synthetic: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let spans: Vec<Vec<(usize, usize)>> = per_segment
        .iter()
        .map(|acts| acts.iter().map(|a| (a.start, a.end)).collect())
        .collect();
    let feasible: Vec<usize> = segments
        .iter()
        .zip(&spans)
        .map(|(s, sp)| count_non_activation_offsets(s.input.len(), sp, w))
        .collect();
    let total: usize = feasible.iter().sum();
    if total == 0 && !positives.is_empty() {
        return Err(Error::InsufficientData(format!(
            "{tag}: no activation-free window of {w} samples"
        )));
    }
    let negatives = (0..positives.len())
        .into_par_iter()
        .map(|k| {
            let mut rng = derived_rng(params.seed, &format!("{tag}-negative"), k as u64);
            let mut pick = rng.gen_range(0..total);
            let si = feasible
                .iter()
                .position(|&n| {
                    if pick < n {
                        true
                    } else {
                        pick -= n;
                        false
                    }
                })
                .expect("pick is below the total");
            let seg = &segments[si];
            let offset = sample_non_activation(seg.input.len(), &spans[si], w, &mut rng)?;
            Ok(Sample {
                input: seg.input.interleaved_window(offset, w)?,
                target: vec![0.0; w],
                span: None,
                synthetic: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut samples = positives;
    samples.extend(negatives);
    Ok(Windows { samples, skipped })
}

/// Distractor pools: activations of every other known appliance metered in
/// the training ranges.
fn distractor_pools(segments: &[(&HouseRecording, usize, usize)], target: Appliance) -> Vec<Vec<Vec<f64>>> {
    let mut pools: BTreeMap<Appliance, Vec<Vec<f64>>> = BTreeMap::new();
    for &(rec, from, to) in segments {
        for (name, values) in &rec.submeters {
            let Ok(app) = name.parse::<Appliance>() else {
                continue;
            };
            if app == target {
                continue;
            }
            let Ok(series) = PowerSeries::new(0.0, rec.aggregate.period, values[from..to].to_vec()) else {
                continue;
            };
            let acts = extract_activations(&series, &ActivationParams::for_appliance(app), &rec.house);
            pools.entry(app).or_default().extend(acts.into_iter().map(|a| a.power));
        }
    }
    pools.into_values().filter(|p| !p.is_empty()).collect()
}

pub fn build_splits(recordings: &[HouseRecording], params: &BuildParams) -> Result<Dataset> {
    params.activation.validate()?;
    let w = params.window;
    if w < 2 {
        return Err(Error::Config(format!("window {w} too short")));
    }
    if !(params.train_fraction > 0.0 && params.train_fraction < 1.0) {
        return Err(Error::Config(format!("train fraction {} not in (0, 1)", params.train_fraction)));
    }
    if !(params.test_ii_days >= 0.0) {
        return Err(Error::Config(format!("test II span {} days must be >= 0", params.test_ii_days)));
    }
    let houses: BTreeSet<&str> = recordings.iter().map(|r| r.house.as_str()).collect();
    if houses.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 houses, got {}",
            houses.len()
        )));
    }
    if !houses.contains(params.test_house.as_str()) {
        return Err(Error::Config(format!("test house `{}` not among recordings", params.test_house)));
    }

    let mut house_end: BTreeMap<&str, f64> = BTreeMap::new();
    for r in recordings {
        let e = house_end.entry(&r.house).or_insert(f64::MIN);
        *e = e.max(r.end_time());
    }

    let mut pool_slices = Vec::new();
    let (mut pool, mut test_i, mut test_ii) = (Vec::new(), Vec::new(), Vec::new());
    for rec in recordings {
        let n = rec.aggregate.len();
        if rec.house == params.test_house {
            test_i.push(Segment::new(rec, 0, n, params)?);
            continue;
        }
        let cutoff = house_end[rec.house.as_str()] - params.test_ii_days * SECONDS_PER_DAY;
        let ci = (((cutoff - rec.aggregate.start_time) / rec.aggregate.period).ceil().max(0.0) as usize).min(n);
        if ci > 0 {
            pool.push(Segment::new(rec, 0, ci, params)?);
            pool_slices.push((rec, 0, ci));
        }
        if ci < n {
            test_ii.push(Segment::new(rec, ci, n, params)?);
        }
    }

    let mut ranges: Vec<TimeRange> = pool.iter().map(|s| s.range(SplitKind::TrainVal)).collect();
    ranges.extend(test_i.iter().map(|s| s.range(SplitKind::TestI)));
    ranges.extend(test_ii.iter().map(|s| s.range(SplitKind::TestII)));

    let pool_windows = balanced_windows(&pool, params, "train-val")?;
    let ti = balanced_windows(&test_i, params, "test-i")?;
    let tii = balanced_windows(&test_ii, params, "test-ii")?;

    let mut samples = pool_windows.samples;
    samples.shuffle(&mut rng_from(derive_seed(params.seed, "split", 0)));
    let n_train = ((samples.len() as f64) * params.train_fraction).round() as usize;
    let val = samples.split_off(n_train.min(samples.len()));
    let mut train = samples;

    let real_spans: Vec<usize> = train
        .iter()
        .chain(&val)
        .filter_map(|s| s.span.map(|(a, b)| b - a))
        .collect();
    let mean_activation_len = if real_spans.is_empty() {
        0.0
    } else {
        (real_spans.iter().sum::<usize>() as f64 / real_spans.len() as f64).round()
    };

    let mut synthetic = 0;
    if let Some(aug) = params.augment {
        if params.channels.len() != 1 {
            return Err(Error::Config(
                "synthetic samples can only be built for univariate input".into(),
            ));
        }
        let targets: Vec<Vec<f64>> = train
            .iter()
            .filter_map(|s| s.span.map(|(a, b)| s.target[a..b].to_vec()))
            .collect();
        if targets.is_empty() {
            return Err(Error::InsufficientData("no training activation to synthesize from".into()));
        }
        let cfg = SynthesisConfig {
            p: aug.p,
            distractors: distractor_pools(&pool_slices, params.appliance),
            seed: derive_seed(params.seed, "synthesis", 0),
        };
        let count = (train.len() as f64 * aug.ratio).round() as usize;
        let extra = (0..count)
            .into_par_iter()
            .map(|k| {
                let mut rng = derived_rng(cfg.seed, "synthetic-sample", k as u64);
                let target = (k % 2 == 0).then(|| targets[rng.gen_range(0..targets.len())].as_slice());
                let win = synthesize_aggregate(target, &cfg, w, params.activation.border, &mut rng)?;
                Ok(Sample {
                    input: win.aggregate,
                    target: win.target,
                    span: win.span,
                    synthetic: true,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        synthetic = extra.len();
        train.extend(extra);
        train.shuffle(&mut rng_from(derive_seed(params.seed, "split", 1)));
    }

    for (name, set) in [("train", &train), ("validation", &val), ("test I", &ti.samples), ("test II", &tii.samples)] {
        if set.is_empty() {
            return Err(Error::InsufficientData(format!("{name} split has no samples")));
        }
    }

    let max_target = train
        .iter()
        .flat_map(|s| s.target.iter())
        .fold(0.0f64, |m, &v| m.max(v));
    let norm = compute_norm_stats(train.iter().map(|s| s.input.as_slice()), params.channels.len(), max_target)?;

    let counts = SplitCounts {
        train: train.len(),
        val: val.len(),
        test_i: ti.samples.len(),
        test_ii: tii.samples.len(),
        synthetic,
        skipped_activations: pool_windows.skipped + ti.skipped + tii.skipped,
    };
    Ok(Dataset {
        info: DatasetInfo {
            params: params.clone(),
            houses: houses.into_iter().map(String::from).collect(),
            ranges,
            norm,
            mean_activation_len,
            counts,
        },
        train,
        val,
        test_i: ti.samples,
        test_ii: tii.samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Channel;

    /// Base load plus a 2.4 kW kettle run of 20 samples every `every`
    /// samples, over `days` days.
    fn house(name: &str, days: usize, every: usize, phase: usize) -> HouseRecording {
        let n = days * 14_400;
        let mut kettle = vec![0.0; n];
        let mut k = phase;
        while k + 20 < n {
            kettle[k..k + 20].iter_mut().for_each(|v| *v = 2400.0);
            k += every;
        }
        let agg: Vec<f64> = kettle
            .iter()
            .enumerate()
            .map(|(t, v)| v + 150.0 + 40.0 * ((t % 97) as f64 / 97.0))
            .collect();
        let series = MultivariateSeries::new(
            1_600_000_000.0,
            6.0,
            vec![Channel {
                name: POWER_CHANNEL.into(),
                values: agg,
            }],
        )
        .unwrap();
        HouseRecording::new(name, series, BTreeMap::from([("kettle".to_string(), kettle)])).unwrap()
    }

    #[test]
    fn two_houses_four_weeks() {
        let recs = vec![house("a", 28, 1200, 300), house("b", 28, 1500, 100)];
        let params = BuildParams::new(Appliance::Kettle, 130, "b", 7);
        let ds = build_splits(&recs, &params).unwrap();
        let info = &ds.info;
        let r = |k: SplitKind| info.ranges.iter().filter(|r| r.split == k).cloned().collect::<Vec<_>>();
        let (tv, t1, t2) = (r(SplitKind::TrainVal), r(SplitKind::TestI), r(SplitKind::TestII));
        assert_eq!(t1.len(), 1);
        assert_eq!(t1[0].house, "b");
        assert_eq!(t1[0].end_s - t1[0].start_s, 28.0 * 86_400.0);
        assert_eq!((tv.len(), t2.len()), (1, 1));
        assert_eq!((tv[0].house.as_str(), t2[0].house.as_str()), ("a", "a"));
        assert_eq!(tv[0].end_s - tv[0].start_s, 14.0 * 86_400.0);
        assert_eq!(t2[0].start_s, tv[0].end_s);
        assert_eq!(t2[0].end_s - t2[0].start_s, 14.0 * 86_400.0);

        // balance and the 80/20 split
        let pool: Vec<&Sample> = ds.train.iter().chain(&ds.val).collect();
        let pos = pool.iter().filter(|s| s.label()).count();
        assert_eq!(pos * 2, pool.len());
        assert_eq!(ds.train.len(), (pool.len() as f64 * 0.8).round() as usize);
        for set in [&ds.test_i, &ds.test_ii] {
            assert_eq!(set.iter().filter(|s| s.label()).count() * 2, set.len());
        }
        assert_eq!(info.mean_activation_len, 20.0);
        assert!(info.norm.sigma_input[0] > 0.0);
        assert_eq!(info.norm.max_target, 2400.0);
    }

    #[test]
    fn windows_are_consistent() {
        let recs = vec![house("a", 3, 700, 50), house("b", 3, 900, 10)];
        let mut params = BuildParams::new(Appliance::Kettle, 130, "b", 1);
        params.test_ii_days = 1.0;
        let ds = build_splits(&recs, &params).unwrap();
        for s in ds.train.iter().chain(&ds.val).chain(&ds.test_i).chain(&ds.test_ii) {
            assert_eq!(s.input.len(), 130);
            assert_eq!(s.target.len(), 130);
            match s.span {
                Some((a, b)) => {
                    assert_eq!(b - a, 20);
                    assert!(a >= 4 && b <= 126);
                    assert!(s.target[a..b].iter().all(|&v| v == 2400.0));
                    // the activation is visible in the aggregate
                    assert!(s.input[a..b].iter().all(|&v| v >= 2400.0));
                    let [sf, ef, p] = s.rectangle();
                    assert!(0.0 <= sf && sf <= ef && ef <= 1.0);
                    assert_eq!(p, 2400.0);
                }
                None => {
                    assert!(s.input.iter().all(|&v| v < 2000.0));
                    assert_eq!(s.rectangle(), [0.0; 3]);
                }
            }
        }
        assert_eq!(build_splits(&recs, &params).unwrap(), ds);
    }

    #[test]
    fn synthetic_augmentation() {
        let mut recs = vec![house("a", 3, 700, 50), house("b", 3, 900, 10)];
        for r in &mut recs {
            let n = r.aggregate.len();
            let fridge: Vec<f64> = (0..n).map(|t| if t % 300 < 100 { 90.0 } else { 0.0 }).collect();
            r.submeters.insert("fridge".into(), fridge);
        }
        let mut params = BuildParams::new(Appliance::Kettle, 130, "b", 3);
        params.test_ii_days = 1.0;
        let plain = build_splits(&recs, &params).unwrap();
        params.augment = Some(AugmentParams::default());
        let ds = build_splits(&recs, &params).unwrap();
        let real = plain.train.len();
        assert_eq!(ds.info.counts.synthetic, real);
        assert_eq!(ds.train.len(), 2 * real);
        assert_eq!(ds.val, plain.val);
        let syn: Vec<&Sample> = ds.train.iter().filter(|s| s.synthetic).collect();
        assert_eq!(syn.iter().filter(|s| s.label()).count(), real.div_ceil(2));
        for s in syn {
            for (a, t) in s.input.iter().zip(&s.target) {
                assert!(a >= t);
            }
        }
        params.channels = vec!["power_w".into(), "form_factor".into()];
        assert!(build_splits(&recs, &params).is_err());
    }

    #[test]
    fn save_and_load_round_trip() {
        let recs = vec![house("a", 3, 700, 50), house("b", 3, 900, 10)];
        let mut params = BuildParams::new(Appliance::Kettle, 130, "b", 1);
        params.test_ii_days = 1.0;
        let ds = build_splits(&recs, &params).unwrap();
        let dir = tempfile::tempdir().unwrap();
        ds.save(dir.path()).unwrap();
        assert_eq!(Dataset::load(dir.path()).unwrap(), ds);
        std::fs::write(dir.path().join("val.csv"), "x_0\n1,2\n").unwrap();
        assert!(Dataset::load(dir.path()).is_err());
    }

    #[test]
    fn insufficient_inputs() {
        let params = BuildParams::new(Appliance::Kettle, 130, "a", 0);
        assert!(matches!(
            build_splits(&[house("a", 2, 700, 0)], &params),
            Err(Error::InsufficientData(_))
        ));
        let params = BuildParams::new(Appliance::Kettle, 130, "zzz", 0);
        assert!(build_splits(&[house("a", 2, 700, 0), house("b", 2, 700, 0)], &params).is_err());
    }
}
