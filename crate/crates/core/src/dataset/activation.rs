//! Appliance activations: above-threshold runs of a submeter series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{Appliance, PowerSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationParams {
    /// Watts; a sample is "on" when strictly above it.
    pub on_power_threshold: f64,
    /// Seconds.
    pub min_on: f64,
    /// Seconds.
    pub max_on: f64,
    /// Off gaps up to this many seconds are bridged.
    pub min_off: f64,
    /// Samples kept free on each side of an activation placed in a window.
    pub border: usize,
}

impl ActivationParams {
    pub fn for_appliance(appliance: Appliance) -> Self {
        let (on_power_threshold, min_on, max_on) = match appliance {
            Appliance::Kettle => (2000.0, 12.0, 300.0),
            Appliance::Fridge => (50.0, 60.0, 3600.0),
            Appliance::Washing => (20.0, 1800.0, 10800.0),
            Appliance::Microwave => (200.0, 12.0, 300.0),
            Appliance::Dishwasher => (10.0, 1800.0, 9000.0),
        };
        Self {
            on_power_threshold,
            min_on,
            max_on,
            min_off: 30.0,
            border: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.on_power_threshold > 0.0) {
            return Err(Error::Config(format!(
                "on-power threshold {} must be > 0",
                self.on_power_threshold
            )));
        }
        if !(self.min_on > 0.0) || !(self.min_on <= self.max_on) {
            return Err(Error::Config(format!(
                "need 0 < min_on ({}) <= max_on ({})",
                self.min_on, self.max_on
            )));
        }
        if !(self.min_off >= 0.0) {
            return Err(Error::Config(format!("min_off {} must be >= 0", self.min_off)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Activation {
    /// First sample index.
    pub start: usize,
    /// One past the last sample index.
    pub end: usize,
    pub power: Vec<f64>,
    pub source: String,
}

impl Activation {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Above-threshold runs, with runs separated by at most `min_off` seconds of
/// off samples merged, kept when their duration lies in `[min_on, max_on]`.
pub fn extract_activations(series: &PowerSeries, params: &ActivationParams, source: &str) -> Vec<Activation> {
    let x = &series.values;
    let period = series.period;
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut k = 0;
    while k < x.len() {
        if x[k] > params.on_power_threshold {
            let s = k;
            while k < x.len() && x[k] > params.on_power_threshold {
                k += 1;
            }
            match runs.last_mut() {
                Some(last) if (s - last.1) as f64 * period <= params.min_off => last.1 = k,
                _ => runs.push((s, k)),
            }
        } else {
            k += 1;
        }
    }
    runs.into_iter()
        .filter(|&(s, e)| {
            let d = (e - s) as f64 * period;
            d >= params.min_on && d <= params.max_on
        })
        .map(|(start, end)| Activation {
            start,
            end,
            power: x[start..end].to_vec(),
            source: source.to_string(),
        })
        .collect()
}

/// Gaps `[from, to)` between activations (and the series edges) that can hold
/// a whole window of length `w`.
fn free_gaps(len: usize, activations: &[(usize, usize)], w: usize) -> Vec<(usize, usize)> {
    let mut spans = activations.to_vec();
    spans.sort_unstable();
    let mut gaps = Vec::new();
    let mut cursor = 0;
    for (s, e) in spans {
        if s > cursor {
            gaps.push((cursor, s));
        }
        cursor = cursor.max(e);
    }
    if len > cursor {
        gaps.push((cursor, len));
    }
    gaps.retain(|&(a, b)| b - a >= w);
    gaps
}

/// Number of window offsets that overlap no activation.
pub fn count_non_activation_offsets(len: usize, activations: &[(usize, usize)], w: usize) -> usize {
    free_gaps(len, activations, w)
        .iter()
        .map(|&(a, b)| b - a - w + 1)
        .sum()
}

/// Uniformly random offset of a length-`w` window lying wholly between
/// activations.
pub fn sample_non_activation(
    len: usize,
    activations: &[(usize, usize)],
    w: usize,
    rng: &mut impl rand::Rng,
) -> Result<usize> {
    if w == 0 {
        return Err(Error::InvalidArgument("window length 0".into()));
    }
    let gaps = free_gaps(len, activations, w);
    let total: usize = gaps.iter().map(|&(a, b)| b - a - w + 1).sum();
    if total == 0 {
        return Err(Error::InsufficientData(format!(
            "no activation-free gap of {w} samples"
        )));
    }
    let mut pick = rng.gen_range(0..total);
    for (a, b) in gaps {
        let n = b - a - w + 1;
        if pick < n {
            return Ok(a + pick);
        }
        pick -= n;
    }
    unreachable!("pick is below the total count")
}

/// Offset range `lo..=hi` of windows that contain `[start, end)` with at
/// least `border` free samples each side, inside a series of `len`. The
/// border shrinks when the activation leaves too little room.
pub fn placement_range(start: usize, end: usize, len: usize, w: usize, border: usize) -> Option<(usize, usize)> {
    let act = end - start;
    if act > w || len < w {
        return None;
    }
    let b = border.min((w - act) / 2);
    let lo = (end + b).saturating_sub(w);
    let hi = start.saturating_sub(b).min(len - w);
    if lo <= hi {
        return Some((lo, hi));
    }
    // too close to the series end for the border: only containment
    let lo = end.saturating_sub(w);
    let hi = start.min(len - w);
    (lo <= hi).then_some((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;
    use proptest::prelude::*;

    fn series(values: Vec<f64>) -> PowerSeries {
        PowerSeries::new(0.0, 6.0, values).unwrap()
    }

    fn kettle() -> ActivationParams {
        ActivationParams::for_appliance(Appliance::Kettle)
    }

    #[test]
    fn quiet_series_has_no_activations() {
        assert!(extract_activations(&series(vec![1999.0; 100]), &kettle(), "a").is_empty());
    }

    #[test]
    fn single_pulse() {
        let mut v = vec![5.0; 100];
        v[40..50].iter_mut().for_each(|x| *x = 2500.0);
        let acts = extract_activations(&series(v.clone()), &kettle(), "h1");
        assert_eq!(acts.len(), 1);
        assert_eq!((acts[0].start, acts[0].end), (40, 50));
        assert_eq!(acts[0].power, vec![2500.0; 10]);
        // 1 sample = 6 s is below min_on = 12 s
        let mut short = vec![5.0; 100];
        short[40] = 2500.0;
        assert!(extract_activations(&series(short), &kettle(), "h1").is_empty());
        // 51 samples = 306 s exceeds max_on
        let mut long = vec![5.0; 100];
        long[10..61].iter_mut().for_each(|x| *x = 2500.0);
        assert!(extract_activations(&series(long), &kettle(), "h1").is_empty());
    }

    #[test]
    fn gaps_up_to_min_off_are_bridged() {
        let mut v = vec![0.0; 60];
        v[10..13].iter_mut().for_each(|x| *x = 2500.0);
        // 5 off samples = 30 s: bridged
        v[18..21].iter_mut().for_each(|x| *x = 2500.0);
        // 6 off samples = 36 s: separate
        v[27..30].iter_mut().for_each(|x| *x = 2500.0);
        let acts = extract_activations(&series(v), &kettle(), "h");
        let spans: Vec<_> = acts.iter().map(|a| (a.start, a.end)).collect();
        assert_eq!(spans, vec![(10, 21), (27, 30)]);
    }

    #[test]
    fn non_activation_sampling() {
        let mut rng = rng_from(1);
        for _ in 0..50 {
            let o = sample_non_activation(500, &[], 130, &mut rng).unwrap();
            assert!(o + 130 <= 500);
        }
        assert!(sample_non_activation(500, &[(0, 500)], 130, &mut rng).is_err());
        // two activations with exactly one window-sized gap between them
        for _ in 0..50 {
            let o = sample_non_activation(300, &[(0, 100), (230, 300)], 130, &mut rng).unwrap();
            assert_eq!(o, 100);
        }
    }

    #[test]
    fn placement_respects_border() {
        let (lo, hi) = placement_range(100, 120, 1000, 130, 4).unwrap();
        assert_eq!((lo, hi), (0, 96));
        assert_eq!(placement_range(300, 320, 1000, 130, 4), Some((194, 296)));
        // activation filling the window leaves a single placement
        assert_eq!(placement_range(10, 140, 1000, 130, 4), Some((10, 10)));
        assert_eq!(placement_range(10, 141, 1000, 130, 4), None);
        // near the series start the range is clipped
        assert_eq!(placement_range(2, 12, 1000, 130, 4), Some((0, 0)));
    }

    /// Independent oracle: an interval qualifies when both ends are on, it
    /// has no internal off gap longer than the bridge limit, and it is
    /// flanked by such a gap (or the series edge) on both sides.
    fn exhaustive(x: &[f64], p: &ActivationParams, period: f64) -> Vec<(usize, usize)> {
        let on = |k: usize| x[k] > p.on_power_threshold;
        let bridge = (p.min_off / period).floor() as usize;
        let n = x.len();
        let mut out = Vec::new();
        for s in 0..n {
            for e in s + 1..=n {
                if !on(s) || !on(e - 1) {
                    continue;
                }
                let mut gap = 0;
                let mut ok = true;
                for k in s..e {
                    gap = if on(k) { 0 } else { gap + 1 };
                    if gap > bridge {
                        ok = false;
                    }
                }
                let left_ok = (s.saturating_sub(bridge + 1)..s).all(|k| !on(k));
                let right_ok = (e..(e + bridge + 1).min(n)).all(|k| !on(k));
                let d = (e - s) as f64 * period;
                if ok && left_ok && right_ok && d >= p.min_on && d <= p.max_on {
                    out.push((s, e));
                }
            }
        }
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn matches_exhaustive_scan(
            steps in proptest::collection::vec((0usize..12, prop_oneof![Just(0.0), Just(50.0), Just(2100.0), Just(2900.0)]), 1..25),
            min_on in 1usize..6,
            extra in 0usize..20,
        ) {
            let mut x = Vec::new();
            for (len, level) in steps {
                x.extend(std::iter::repeat(level).take(len));
            }
            prop_assume!(!x.is_empty());
            let p = ActivationParams {
                on_power_threshold: 2000.0,
                min_on: min_on as f64 * 6.0,
                max_on: (min_on + extra) as f64 * 6.0,
                min_off: 30.0,
                border: 0,
            };
            let acts = extract_activations(&series(x.clone()), &p, "h");
            for a in &acts {
                let d = a.len() as f64 * 6.0;
                prop_assert!(d >= p.min_on && d <= p.max_on);
                prop_assert!(a.power.iter().cloned().fold(f64::MIN, f64::max) > p.on_power_threshold);
            }
            let got: Vec<_> = acts.iter().map(|a| (a.start, a.end)).collect();
            prop_assert_eq!(got, exhaustive(&x, &p, 6.0));
        }

        #[test]
        fn sampled_windows_avoid_activations(
            acts in proptest::collection::vec((0usize..900, 1usize..60), 0..6),
            seed in 0u64..1000,
        ) {
            let spans: Vec<(usize, usize)> = acts.iter().map(|&(s, l)| (s, (s + l).min(1000))).collect();
            let mut rng = rng_from(seed);
            if let Ok(o) = sample_non_activation(1000, &spans, 100, &mut rng) {
                for &(s, e) in &spans {
                    prop_assert!(o + 100 <= s || o >= e);
                }
            } else {
                prop_assert_eq!(count_non_activation_offsets(1000, &spans, 100), 0);
            }
        }
    }
}
