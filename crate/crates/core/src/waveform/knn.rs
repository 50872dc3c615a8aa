use crate::error::{Error, Result};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-nearest-neighbour label by Euclidean distance.
///
/// Distance ties go to the lower training index. With `k > 1` the majority
/// label wins; a vote tie goes to the tied label seen nearest first.
pub fn knn_classify(x_train: &[Vec<f64>], y_train: &[usize], x: &[f64], k: usize) -> Result<usize> {
    if x_train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if x_train.len() != y_train.len() {
        return Err(Error::LengthMismatch {
            left: x_train.len(),
            right: y_train.len(),
        });
    }
    if k == 0 || k > x_train.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must be in 1..={}",
            x_train.len()
        )));
    }
    let mut order: Vec<(f64, usize)> = x_train
        .iter()
        .enumerate()
        .map(|(i, row)| (sq_dist(row, x), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let nearest = &order[..k];
    let mut tally: Vec<(usize, usize)> = Vec::new();
    for &(_, i) in nearest {
        match tally.iter_mut().find(|(label, _)| *label == y_train[i]) {
            Some(entry) => entry.1 += 1,
            None => tally.push((y_train[i], 1)),
        }
    }
    let best = tally.iter().map(|t| t.1).max().unwrap();
    Ok(tally.iter().find(|t| t.1 == best).unwrap().0)
}
