//! Evaluation reports and their CSV/JSON forms.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::metrics::{ClassificationMetrics, RegressionMetrics};
use super::roc::RocPoint;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Procedure {
    Activations,
    Rolling,
}

impl fmt::Display for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Procedure::Activations => "activations",
            Procedure::Rolling => "rolling",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub procedure: Procedure,
    #[serde(default)]
    pub appliance: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    /// Which data was evaluated (`val`, `test_i`, `test_ii`, ...).
    #[serde(default)]
    pub split: Option<String>,
    /// Power values compared.
    pub n: usize,
    /// Windows classified.
    pub windows: usize,
    #[serde(flatten)]
    pub regression: RegressionMetrics,
    #[serde(flatten)]
    pub classification: ClassificationMetrics,
    /// Watts; windows whose score exceeds it are called positive.
    pub threshold: f64,
    /// Absent when only one class occurs.
    pub auc: Option<f64>,
    pub roc: Vec<RocPoint>,
}

impl EvalReport {
    pub fn with_labels(mut self, appliance: &str, model: &str, split: &str) -> Self {
        self.appliance = Some(appliance.to_string());
        self.model = Some(model.to_string());
        self.split = Some(split.to_string());
        self
    }
}

pub fn write_roc_csv<W: Write>(writer: W, points: &[RocPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["fpr", "tpr", "threshold"])?;
    for p in points {
        w.write_record([p.fpr.to_string(), p.tpr.to_string(), p.threshold.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Aggregate, ground truth and prediction on a shared time axis.
pub fn write_overlay_csv<W: Write>(
    writer: W,
    start_time: f64,
    period: f64,
    aggregate: &[f64],
    truth: &[f64],
    pred: &[f64],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["timestamp", "aggregate_w", "truth_w", "prediction_w"])?;
    for (k, ((a, t), p)) in aggregate.iter().zip(truth).zip(pred).enumerate() {
        w.write_record([
            (start_time + k as f64 * period).to_string(),
            a.to_string(),
            t.to_string(),
            p.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub appliance: String,
    pub model: String,
    pub procedure: Procedure,
    pub split: String,
    pub auc: Option<f64>,
    pub mae: f64,
    pub reite: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportSummary {
    pub rows: Vec<SummaryRow>,
    pub warnings: Vec<String>,
}

/// One row per (appliance, model, procedure, split); later reports replace
/// earlier ones with a warning.
pub fn merge_reports(reports: &[(String, EvalReport)]) -> ReportSummary {
    let mut table: BTreeMap<(String, String, Procedure, String), (String, SummaryRow)> = BTreeMap::new();
    let mut warnings = Vec::new();
    for (source, r) in reports {
        let unknown = || "unknown".to_string();
        let row = SummaryRow {
            appliance: r.appliance.clone().unwrap_or_else(unknown),
            model: r.model.clone().unwrap_or_else(unknown),
            procedure: r.procedure,
            split: r.split.clone().unwrap_or_else(unknown),
            auc: r.auc,
            mae: r.regression.mae,
            reite: r.regression.reite,
            accuracy: r.classification.accuracy,
            precision: r.classification.precision,
            recall: r.classification.recall,
            f1: r.classification.f1,
            threshold: r.threshold,
        };
        let key = (row.appliance.clone(), row.model.clone(), row.procedure, row.split.clone());
        if let Some((old, _)) = table.insert(key.clone(), (source.clone(), row)) {
            warnings.push(format!(
                "{} / {} / {} / {}: `{source}` replaces `{old}`",
                key.0, key.1, key.2, key.3
            ));
        }
    }
    ReportSummary {
        rows: table.into_values().map(|(_, r)| r).collect(),
        warnings,
    }
}

pub fn write_summary_csv<W: Write>(writer: W, summary: &ReportSummary) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in &summary.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// AUC pivot: one row per (appliance, model), one column per
/// `procedure:split`.
pub fn write_auc_table_csv<W: Write>(writer: W, summary: &ReportSummary) -> Result<()> {
    let mut columns: Vec<(Procedure, String)> = summary
        .rows
        .iter()
        .map(|r| (r.procedure, r.split.clone()))
        .collect();
    columns.sort();
    columns.dedup();
    let mut table: BTreeMap<(&str, &str), Vec<String>> = BTreeMap::new();
    for r in &summary.rows {
        let col = columns
            .iter()
            .position(|c| c.0 == r.procedure && c.1 == r.split)
            .expect("column collected above");
        let row = table
            .entry((&r.appliance, &r.model))
            .or_insert_with(|| vec![String::new(); columns.len()]);
        row[col] = r.auc.map_or_else(|| "-".to_string(), |a| format!("{a:.3}"));
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["appliance".to_string(), "model".to_string()];
    header.extend(columns.iter().map(|(p, s)| format!("{p}:{s}")));
    w.write_record(&header)?;
    for ((appliance, model), cells) in table {
        let mut rec = vec![appliance.to_string(), model.to_string()];
        rec.extend(cells);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
