//! Feature study over a labelled set of switch-on records: combined feature
//! matrix, importance ranking by both criteria, and a classifier benchmark
//! over feature subsets.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::features::{feature_names, record_features, SegmentMode};
use super::forest::{forest_importance, forest_predict, train_forest, ForestParams};
use super::io::FeatureMatrix;
use super::knn::knn_classify;
use super::mutual_info::mutual_information_ranking;
use super::transient::TransientParams;
use super::WaveformRecord;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from};

const TRANSIENT_PREFIX: &str = "t_";
const STEADY_PREFIX: &str = "s_";

/// Normalized importances of one mode's features under both criteria.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub mode: SegmentMode,
    pub feature_names: Vec<String>,
    pub random_forest: Vec<f64>,
    pub mutual_information: Vec<f64>,
}

impl ImportanceReport {
    /// Names of the `k` highest-ranked features under one criterion.
    pub fn top(&self, k: usize, by_forest: bool) -> Vec<String> {
        let scores = if by_forest {
            &self.random_forest
        } else {
            &self.mutual_information
        };
        let mut idx: Vec<usize> = (0..scores.len()).collect();
        idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        idx.into_iter()
            .take(k)
            .map(|i| self.feature_names[i].clone())
            .collect()
    }
}

/// Records that could not be featurised are skipped and reported.
pub struct StudyMatrix {
    pub matrix: FeatureMatrix,
    pub skipped: Vec<(usize, String)>,
}

/// One row per record: transient features (`t_` prefix) followed by steady
/// features (`s_` prefix).
pub fn build_feature_matrix(records: &[WaveformRecord], params: &TransientParams) -> Result<StudyMatrix> {
    let mut names: Vec<String> = feature_names(SegmentMode::Transient)
        .iter()
        .map(|n| format!("{TRANSIENT_PREFIX}{n}"))
        .collect();
    names.extend(
        feature_names(SegmentMode::Steady)
            .iter()
            .map(|n| format!("{STEADY_PREFIX}{n}")),
    );
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut skipped = Vec::new();
    for (k, rec) in records.iter().enumerate() {
        let Some(label) = rec.label.clone() else {
            skipped.push((k, "record has no label".to_string()));
            continue;
        };
        match record_features(rec, params) {
            Ok(rf) => {
                let mut row = rf.transient.values;
                row.extend(rf.steady.values);
                rows.push(row);
                labels.push(label);
            }
            Err(e) => skipped.push((k, e.to_string())),
        }
    }
    if rows.is_empty() {
        return Err(Error::InsufficientData("no record produced features".into()));
    }
    Ok(StudyMatrix {
        matrix: FeatureMatrix {
            names,
            rows,
            labels,
        },
        skipped,
    })
}

/// Importance of one mode's scalar features (VI pixels excluded).
pub fn importance_report(
    matrix: &FeatureMatrix,
    mode: SegmentMode,
    forest: &ForestParams,
    bins: usize,
) -> Result<ImportanceReport> {
    let prefix = match mode {
        SegmentMode::Transient => TRANSIENT_PREFIX,
        SegmentMode::Steady => STEADY_PREFIX,
    };
    let sub = matrix.select_columns(|n| n.starts_with(prefix) && !n[prefix.len()..].starts_with("vi_"));
    if sub.names.is_empty() {
        return Err(Error::InvalidArgument(format!("no `{prefix}` columns in matrix")));
    }
    let (y, _) = sub.encoded_labels();
    let mi = mutual_information_ranking(&sub.rows, &y, bins)?;
    let model = train_forest(&sub.rows, &y, forest)?;
    Ok(ImportanceReport {
        mode,
        feature_names: sub
            .names
            .iter()
            .map(|n| n[prefix.len()..].to_string())
            .collect(),
        random_forest: forest_importance(&model),
        mutual_information: mi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubset {
    Transient,
    Steady,
    SteadyTransient,
    SteadyVi,
    All,
}

impl FeatureSubset {
    pub const ALL: [FeatureSubset; 5] = [
        FeatureSubset::Transient,
        FeatureSubset::Steady,
        FeatureSubset::SteadyTransient,
        FeatureSubset::SteadyVi,
        FeatureSubset::All,
    ];

    fn keeps(self, name: &str) -> bool {
        let (transient, rest) = match name.strip_prefix(TRANSIENT_PREFIX) {
            Some(r) => (true, r),
            None => (false, name.strip_prefix(STEADY_PREFIX).unwrap_or(name)),
        };
        let vi = rest.starts_with("vi_");
        match self {
            FeatureSubset::Transient => transient && !vi,
            FeatureSubset::Steady => !transient && !vi,
            FeatureSubset::SteadyTransient => !vi,
            FeatureSubset::SteadyVi => !transient,
            FeatureSubset::All => true,
        }
    }

    /// 1-NN is only reported for the smaller subsets.
    fn with_knn(self) -> bool {
        matches!(
            self,
            FeatureSubset::Transient | FeatureSubset::Steady | FeatureSubset::SteadyVi
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub subset: FeatureSubset,
    pub knn_accuracy: Option<f64>,
    pub rf_accuracy_mean: f64,
    pub rf_accuracy_std: f64,
}

/// Holdout accuracy of 1-NN and of the forest (mean ± std over seeded
/// repetitions) for every feature subset.
pub fn classifier_benchmark(
    matrix: &FeatureMatrix,
    test_fraction: f64,
    repetitions: usize,
    forest: &ForestParams,
    seed: u64,
) -> Result<Vec<BenchmarkRow>> {
    let n = matrix.rows.len();
    if n < 2 {
        return Err(Error::InsufficientData("need at least 2 records".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from(derive_seed(seed, "benchmark-split", 0)));
    let n_test = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
    let (test, train) = order.split_at(n_test);
    let (y, _) = matrix.encoded_labels();

    FeatureSubset::ALL
        .iter()
        .map(|&subset| {
            let sub = matrix.select_columns(|name| subset.keeps(name));
            let pick = |idx: &[usize]| -> Vec<Vec<f64>> { idx.iter().map(|&i| sub.rows[i].clone()).collect() };
            let (xtr, xte) = (pick(train), pick(test));
            let ytr: Vec<usize> = train.iter().map(|&i| y[i]).collect();
            let yte: Vec<usize> = test.iter().map(|&i| y[i]).collect();
            let accuracy = |pred: &[usize]| {
                pred.iter().zip(&yte).filter(|(a, b)| a == b).count() as f64 / yte.len() as f64
            };
            let knn_accuracy = if subset.with_knn() {
                let pred = xte
                    .iter()
                    .map(|x| knn_classify(&xtr, &ytr, x, 1))
                    .collect::<Result<Vec<_>>>()?;
                Some(accuracy(&pred))
            } else {
                None
            };
            let mut accs = Vec::with_capacity(repetitions);
            for r in 0..repetitions.max(1) {
                let params = ForestParams {
                    seed: derive_seed(forest.seed, "benchmark-forest", r as u64),
                    ..*forest
                };
                let model = train_forest(&xtr, &ytr, &params)?;
                let pred: Vec<usize> = xte.iter().map(|x| forest_predict(&model, x)).collect();
                accs.push(accuracy(&pred));
            }
            let mean = accs.iter().sum::<f64>() / accs.len() as f64;
            let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / accs.len() as f64;
            Ok(BenchmarkRow {
                subset,
                knn_accuracy,
                rf_accuracy_mean: mean,
                rf_accuracy_std: var.sqrt(),
            })
        })
        .collect()
}
