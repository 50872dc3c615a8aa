//! Random forest of Gini-split CART trees.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaxFeatures {
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(self, d: usize) -> usize {
        let m = match self {
            MaxFeatures::Sqrt => (d as f64).sqrt().floor() as usize,
            MaxFeatures::All => d,
            MaxFeatures::Count(n) => n,
        };
        m.clamp(1, d.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: Option<usize>,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            trees: 100,
            max_depth: None,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        histogram: Vec<f64>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    fn leaf_for(&self, x: &[f64]) -> &[f64] {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                Node::Leaf { histogram } => return histogram,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(self.leaf_for(x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub n_classes: usize,
    pub n_features: usize,
    pub seed: u64,
    /// Per-feature impurity decrease, normalized within each tree and
    /// averaged over trees.
    importances: Vec<f64>,
}

fn argmax(h: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in h.iter().enumerate() {
        if v > h[best] {
            best = k;
        }
    }
    best
}

fn gini(counts: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / total) * (c / total)).sum::<f64>()
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    max_features: usize,
    max_depth: Option<usize>,
    n_root: f64,
    importance: Vec<f64>,
    nodes: Vec<Node>,
    rng: Rng,
}

impl Builder<'_> {
    fn histogram(&self, idx: &[usize]) -> Vec<f64> {
        let mut h = vec![0.0; self.n_classes];
        for &i in idx {
            h[self.y[i]] += 1.0;
        }
        h
    }

    /// Best split over a random feature subset; keeps looking past the subset
    /// until at least one valid partition is found.
    fn best_split(&mut self, idx: &mut [usize], parent: &[f64]) -> Option<(usize, f64, f64)> {
        let d = self.x[0].len();
        let mut order: Vec<usize> = (0..d).collect();
        order.shuffle(&mut self.rng);
        let n = idx.len() as f64;
        let parent_gini = gini(parent, n);
        let mut best: Option<(usize, f64, f64)> = None;
        for (seen, &f) in order.iter().enumerate() {
            if seen >= self.max_features && best.is_some() {
                break;
            }
            idx.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]));
            let mut left = vec![0.0; self.n_classes];
            for k in 0..idx.len() - 1 {
                left[self.y[idx[k]]] += 1.0;
                let (a, b) = (self.x[idx[k]][f], self.x[idx[k + 1]][f]);
                if a == b {
                    continue;
                }
                let nl = (k + 1) as f64;
                let nr = n - nl;
                let right: Vec<f64> = parent.iter().zip(&left).map(|(p, l)| p - l).collect();
                let weighted = (nl * gini(&left, nl) + nr * gini(&right, nr)) / n;
                let gain = parent_gini - weighted;
                let threshold = a + (b - a) / 2.0;
                if best.map_or(true, |(_, _, g)| gain > g) {
                    best = Some((f, threshold, gain));
                }
            }
        }
        best
    }

    fn build(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let hist = self.histogram(idx);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            histogram: hist.clone(),
        });
        let pure = hist.iter().filter(|&&c| c > 0.0).count() <= 1;
        let depth_ok = self.max_depth.map_or(true, |m| depth < m);
        if pure || idx.len() < 2 || !depth_ok {
            return id;
        }
        let Some((feature, threshold, gain)) = self.best_split(idx, &hist) else {
            return id;
        };
        self.importance[feature] += idx.len() as f64 / self.n_root * gain;
        idx.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]));
        let cut = idx.partition_point(|&i| self.x[i][feature] <= threshold);
        let (l, r) = idx.split_at_mut(cut);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

fn validate(x: &[Vec<f64>], y: &[usize]) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let d = x[0].len();
    for (k, row) in x.iter().enumerate() {
        if row.len() != d {
            return Err(Error::ShapeMismatch(format!("row {k} has {} features, expected {d}", row.len())));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("training row {k}")));
        }
    }
    Ok(d)
}

/// Fit a bagged forest; trees are fit in parallel with per-tree seeds.
pub fn train_forest(x: &[Vec<f64>], y: &[usize], params: &ForestParams) -> Result<ForestModel> {
    let d = validate(x, y)?;
    if params.trees == 0 {
        return Err(Error::InvalidArgument("forest needs at least one tree".into()));
    }
    let n_classes = y.iter().max().unwrap() + 1;
    let n = x.len();
    let max_features = params.max_features.resolve(d);

    let fitted: Vec<(Tree, Vec<f64>)> = (0..params.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from(derive_seed(params.seed, "forest-tree", t as u64));
            let mut idx: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut b = Builder {
                x,
                y,
                n_classes,
                max_features,
                max_depth: params.max_depth,
                n_root: idx.len() as f64,
                importance: vec![0.0; d],
                nodes: Vec::new(),
                rng,
            };
            b.build(&mut idx, 0);
            let total: f64 = b.importance.iter().sum();
            if total > 0.0 {
                b.importance.iter_mut().for_each(|v| *v /= total);
            }
            (Tree { nodes: b.nodes }, b.importance)
        })
        .collect();

    let mut importances = vec![0.0; d];
    let mut trees = Vec::with_capacity(fitted.len());
    for (tree, imp) in fitted {
        for (a, b) in importances.iter_mut().zip(&imp) {
            *a += b;
        }
        trees.push(tree);
    }
    Ok(ForestModel {
        trees,
        n_classes,
        n_features: d,
        seed: params.seed,
        importances,
    })
}

/// Majority vote over trees; ties go to the lowest class index.
pub fn forest_predict(model: &ForestModel, x: &[f64]) -> usize {
    let mut votes = vec![0.0; model.n_classes];
    for t in &model.trees {
        votes[t.predict(x)] += 1.0;
    }
    argmax(&votes)
}

/// Normalized impurity-decrease importances (sum to 1). A forest without any
/// split spreads importance uniformly.
pub fn forest_importance(model: &ForestModel) -> Vec<f64> {
    let total: f64 = model.importances.iter().sum();
    if total > 0.0 {
        model.importances.iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / model.n_features as f64; model.n_features]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;
    use proptest::prelude::*;
    use crate::seed::standard_normal;

    #[test]
    fn single_point_and_empty() {
        let m = train_forest(&[vec![1.0, 2.0]], &[3], &ForestParams::default()).unwrap();
        assert_eq!(forest_predict(&m, &[100.0, -5.0]), 3);
        let imp = forest_importance(&m);
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(matches!(train_forest(&[], &[], &ForestParams::default()), Err(Error::Empty(_))));
    }

    #[test]
    fn importance_favours_informative_feature() {
        let mut rng = rng_from(11);
        let n = 300;
        let mut x = Vec::new();
        let mut y = Vec::new();
        for k in 0..n {
            let c = k % 2;
            x.push(vec![c as f64 * 3.0 + standard_normal(&mut rng) * 0.3, standard_normal(&mut rng)]);
            y.push(c);
        }
        let m = train_forest(&x, &y, &ForestParams { trees: 30, seed: 5, ..Default::default() }).unwrap();
        let imp = forest_importance(&m);
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(imp[0] > imp[1]);
    }

    #[test]
    fn deterministic_given_seed() {
        let x: Vec<Vec<f64>> = (0..50).map(|k| vec![(k * 7 % 13) as f64, (k % 5) as f64]).collect();
        let y: Vec<usize> = (0..50).map(|k| k % 3).collect();
        let p = ForestParams { trees: 10, seed: 99, ..Default::default() };
        assert_eq!(train_forest(&x, &y, &p).unwrap(), train_forest(&x, &y, &p).unwrap());
    }

    proptest! {
        #[test]
        fn full_tree_memorises_unique_points(
            raw in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3, 0usize..4), 1..60)
        ) {
            // make the first coordinate unique
            let x: Vec<Vec<f64>> = raw.iter().enumerate().map(|(k, (a, b, _))| vec![a + k as f64 * 1e4, *b]).collect();
            let y: Vec<usize> = raw.iter().map(|r| r.2).collect();
            let p = ForestParams { trees: 1, bootstrap: false, max_features: MaxFeatures::All, ..Default::default() };
            let m = train_forest(&x, &y, &p).unwrap();
            for (row, label) in x.iter().zip(&y) {
                prop_assert_eq!(forest_predict(&m, row), *label);
            }
        }
    }
}
