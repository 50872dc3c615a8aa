//! Plug-in mutual information between a binned continuous feature and a
//! discrete label.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 10;

/// Equal-frequency bin index of each value. Equal values always share a bin
/// (the bin of their first rank), so ties never split.
pub fn equal_frequency_bins(x: &[f64], bins: usize) -> Vec<usize> {
    let n = x.len();
    let bins = bins.max(1);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0; n];
    let mut run_start = 0;
    for r in 0..n {
        if r > 0 && x[order[r]] != x[order[r - 1]] {
            run_start = r;
        }
        out[order[r]] = run_start * bins / n;
    }
    out
}

/// I(X; Y) in nats for two discrete sequences.
pub fn discrete_mutual_information(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
    let mut pa: HashMap<usize, f64> = HashMap::new();
    let mut pb: HashMap<usize, f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1.0;
        *pa.entry(x).or_default() += 1.0;
        *pb.entry(y).or_default() += 1.0;
    }
    let mut keys: Vec<_> = joint.keys().copied().collect();
    keys.sort_unstable();
    keys.into_iter()
        .map(|(x, y)| {
            let pxy = joint[&(x, y)] / n;
            pxy * (pxy / ((pa[&x] / n) * (pb[&y] / n))).ln()
        })
        .sum::<f64>()
        .max(0.0)
}

pub fn mutual_information(x: &[f64], y: &[usize], bins: usize) -> f64 {
    discrete_mutual_information(&equal_frequency_bins(x, bins), y)
}

/// Per-feature MI with the labels, normalized to sum to 1.
///
/// `x` is row-major (one row per sample). When every feature carries zero
/// information the importance is spread uniformly.
pub fn mutual_information_ranking(x: &[Vec<f64>], y: &[usize], bins: usize) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::Empty("feature matrix"));
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if y.iter().all(|&l| l == y[0]) {
        return Err(Error::SingleClass);
    }
    let d = x[0].len();
    let scores: Vec<f64> = (0..d)
        .map(|f| {
            let col: Vec<f64> = x.iter().map(|r| r[f]).collect();
            mutual_information(&col, y, bins)
        })
        .collect();
    let total: f64 = scores.iter().sum();
    Ok(if total > 0.0 {
        scores.iter().map(|s| s / total).collect()
    } else {
        vec![1.0 / d as f64; d]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::{rng_from, standard_normal};

    #[test]
    fn bins_are_balanced_and_tie_safe() {
        let x: Vec<f64> = (0..100).map(f64::from).collect();
        let b = equal_frequency_bins(&x, 10);
        for k in 0..10 {
            assert_eq!(b.iter().filter(|&&v| v == k).count(), 10);
        }
        let b = equal_frequency_bins(&[1.0, 1.0, 1.0, 2.0], 2);
        assert_eq!(b, vec![0, 0, 0, 1]);
    }

    #[test]
    fn deterministic_label_gives_entropy() {
        let y: Vec<usize> = (0..1000).map(|k| k % 2).collect();
        let x: Vec<f64> = y.iter().map(|&c| c as f64 * 5.0 + 1.0).collect();
        assert!((mutual_information(&x, &y, 10) - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn ranking_cases() {
        let mut rng = rng_from(2024);
        let n = 2000;
        let y: Vec<usize> = (0..n).map(|k| k % 3).collect();
        let x: Vec<Vec<f64>> = y
            .iter()
            .map(|&c| {
                let noise = standard_normal(&mut rng);
                vec![noise, (c * c) as f64 + 7.0, noise]
            })
            .collect();
        let r = mutual_information_ranking(&x, &y, DEFAULT_BINS).unwrap();
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(r[1] > r[0] && r[1] > r[2]);
        assert!(r[0] < 0.05);
        assert_eq!(r[0], r[2]);
        assert!(matches!(
            mutual_information_ranking(&x, &vec![1; n], DEFAULT_BINS),
            Err(Error::SingleClass)
        ));
    }
}
