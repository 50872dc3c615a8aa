//! Synthetic aggregate windows: a target activation plus randomly placed
//! distractor activations from other appliances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    /// Probability of adding one activation from each distractor pool.
    pub p: f64,
    /// One pool per distractor appliance; each entry is an activation's
    /// power slice.
    pub distractors: Vec<Vec<Vec<f64>>>,
    pub seed: u64,
}

impl SynthesisConfig {
    pub fn new(distractors: Vec<Vec<Vec<f64>>>, seed: u64) -> Self {
        Self {
            p: 0.4,
            distractors,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Config(format!("distractor probability {} not in [0, 1]", self.p)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWindow {
    pub aggregate: Vec<f64>,
    /// Target appliance power (zeros outside the placed activation).
    pub target: Vec<f64>,
    /// Window-relative `[start, end)` of the placed target.
    pub span: Option<(usize, usize)>,
    /// Whether each distractor pool contributed.
    pub included: Vec<bool>,
}

/// Build one window of length `w`. The target, if any, is placed uniformly
/// with `border` free samples each side (shrunk when it does not fit).
/// Distractors may be partly outside the window and are clipped.
pub fn synthesize_aggregate(
    target: Option<&[f64]>,
    cfg: &SynthesisConfig,
    w: usize,
    border: usize,
    rng: &mut impl rand::Rng,
) -> Result<SyntheticWindow> {
    cfg.validate()?;
    let mut aggregate = vec![0.0; w];
    let mut target_series = vec![0.0; w];
    let span = match target {
        Some(t) => {
            if t.is_empty() || t.len() > w {
                return Err(Error::InvalidArgument(format!(
                    "target activation of {} samples does not fit window {w}",
                    t.len()
                )));
            }
            let b = border.min((w - t.len()) / 2);
            let offset = rng.gen_range(b..=w - t.len() - b);
            target_series[offset..offset + t.len()].copy_from_slice(t);
            Some((offset, offset + t.len()))
        }
        None => None,
    };
    aggregate.copy_from_slice(&target_series);
    let mut included = Vec::with_capacity(cfg.distractors.len());
    for pool in &cfg.distractors {
        let add = !pool.is_empty() && rng.gen_bool(cfg.p);
        included.push(add);
        if !add {
            continue;
        }
        let act = &pool[rng.gen_range(0..pool.len())];
        if act.is_empty() {
            continue;
        }
        // any start that overlaps the window by at least one sample
        let start = rng.gen_range(-(act.len() as i64) + 1..w as i64);
        for (k, &v) in act.iter().enumerate() {
            let t = start + k as i64;
            if (0..w as i64).contains(&t) {
                aggregate[t as usize] += v;
            }
        }
    }
    Ok(SyntheticWindow {
        aggregate,
        target: target_series,
        span,
        included,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;

    #[test]
    fn no_distractors_gives_target_alone() {
        let cfg = SynthesisConfig {
            p: 0.0,
            distractors: vec![vec![vec![100.0; 5]]],
            seed: 0,
        };
        let t = vec![2000.0; 10];
        let mut rng = rng_from(4);
        for _ in 0..20 {
            let s = synthesize_aggregate(Some(&t), &cfg, 40, 3, &mut rng).unwrap();
            assert_eq!(s.aggregate, s.target);
            let (a, b) = s.span.unwrap();
            assert_eq!(b - a, 10);
            assert!(a >= 3 && b <= 37);
        }
    }

    #[test]
    fn certain_distractor_is_superposed() {
        // a distractor as long as the window can only overlap it fully when
        // it starts at 0; check the pointwise sum against its placement
        let cfg = SynthesisConfig {
            p: 1.0,
            distractors: vec![vec![vec![300.0; 50]]],
            seed: 0,
        };
        let t = vec![1000.0; 4];
        let mut rng = rng_from(8);
        for _ in 0..20 {
            let s = synthesize_aggregate(Some(&t), &cfg, 20, 0, &mut rng).unwrap();
            assert_eq!(s.included, vec![true]);
            for (k, (&agg, &tgt)) in s.aggregate.iter().zip(&s.target).enumerate() {
                let d = agg - tgt;
                assert!(d == 0.0 || d == 300.0, "sample {k}: {d}");
                assert!(agg >= tgt);
            }
            assert!(s.aggregate.iter().zip(&s.target).any(|(a, t)| a - t == 300.0));
        }
    }

    #[test]
    fn inclusion_rate_matches_p() {
        let cfg = SynthesisConfig::new(vec![vec![vec![50.0; 3], vec![80.0; 7]]], 0);
        let mut rng = rng_from(20240601);
        let n = 10_000;
        let hits = (0..n)
            .filter(|_| synthesize_aggregate(None, &cfg, 30, 0, &mut rng).unwrap().included[0])
            .count();
        let rate = hits as f64 / n as f64;
        assert!((rate - 0.4).abs() <= 0.02, "rate {rate}");
    }

    #[test]
    fn oversized_target_errors() {
        let cfg = SynthesisConfig::new(vec![], 0);
        let mut rng = rng_from(0);
        assert!(synthesize_aggregate(Some(&[1.0; 31]), &cfg, 30, 0, &mut rng).is_err());
        let s = synthesize_aggregate(Some(&[1.0; 30]), &cfg, 30, 5, &mut rng).unwrap();
        assert_eq!(s.span, Some((0, 30)));
    }
}
