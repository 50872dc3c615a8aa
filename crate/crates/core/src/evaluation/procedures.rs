//! The "activations" and "rolling window" evaluation procedures.

use serde::{Deserialize, Serialize};

use super::metrics::{classification_metrics, regression_metrics};
use super::model::{window_score, WindowModel};
use super::report::{EvalReport, Procedure};
use super::roc::roc_auc;
use crate::dataset::{extract_activations, ActivationParams, Sample};
use crate::error::{Error, Result};
use crate::series::{MultivariateSeries, PowerSeries};

/// Scores and labels of a balanced window set.
pub fn activation_scores(model: &dyn WindowModel, samples: &[Sample]) -> Result<(Vec<f64>, Vec<bool>)> {
    let inputs: Vec<Vec<f64>> = samples.iter().map(|s| s.input.clone()).collect();
    let outputs = model.predict(&inputs)?;
    Ok((
        outputs.iter().map(window_score).collect(),
        samples.iter().map(Sample::label).collect(),
    ))
}

/// Evaluate a model on balanced windows. `period` (s) converts power to
/// energy for the regression metrics.
pub fn evaluate_activations(
    model: &dyn WindowModel,
    samples: &[Sample],
    threshold: f64,
    period: f64,
) -> Result<EvalReport> {
    if samples.is_empty() {
        return Err(Error::Empty("evaluation windows"));
    }
    let w = model.window();
    let inputs: Vec<Vec<f64>> = samples.iter().map(|s| s.input.clone()).collect();
    let outputs = model.predict(&inputs)?;
    let scores: Vec<f64> = outputs.iter().map(window_score).collect();
    let labels: Vec<bool> = samples.iter().map(Sample::label).collect();
    let pred: Vec<f64> = outputs.iter().flat_map(|o| o.rasterize(w)).collect();
    let truth: Vec<f64> = samples.iter().flat_map(|s| s.target.iter().copied()).collect();
    let predicted: Vec<bool> = scores.iter().map(|&s| s > threshold).collect();
    let roc = roc_auc(&scores, &labels).ok();
    Ok(EvalReport {
        procedure: Procedure::Activations,
        appliance: None,
        model: None,
        split: None,
        n: truth.len(),
        windows: samples.len(),
        regression: regression_metrics(&pred, &truth, period)?,
        classification: classification_metrics(&predicted, &labels)?,
        threshold,
        auc: roc.as_ref().map(|r| r.auc),
        roc: roc.map(|r| r.points).unwrap_or_default(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RollingConfig {
    /// Window length `w` in samples.
    pub window: usize,
    /// Mean activation length `a` in samples.
    pub mean_activation_len: f64,
}

impl RollingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || !(self.mean_activation_len >= 0.0) || 2.0 * self.mean_activation_len >= self.window as f64
        {
            return Err(Error::Config(format!(
                "rolling window needs 0 <= 2a < w (a = {}, w = {})",
                self.mean_activation_len, self.window
            )));
        }
        Ok(())
    }

    /// `w / (w − 2a)`, compensating for activations cut at window edges.
    pub fn correction(&self) -> f64 {
        let w = self.window as f64;
        w / (w - 2.0 * self.mean_activation_len)
    }
}

const ROLLING_BLOCK: usize = 2048;

/// Stride-1 sliding prediction: every timestamp averages the estimates of
/// all windows covering it, scaled by the correction factor.
pub fn rolling_window_predict(
    model: &dyn WindowModel,
    input: &MultivariateSeries,
    cfg: &RollingConfig,
) -> Result<PowerSeries> {
    cfg.validate()?;
    let w = cfg.window;
    if w != model.window() {
        return Err(Error::Config(format!(
            "rolling window {w} differs from the model window {}",
            model.window()
        )));
    }
    if input.channels().len() != model.channels() {
        return Err(Error::ShapeMismatch(format!(
            "series has {} channels, model takes {}",
            input.channels().len(),
            model.channels()
        )));
    }
    let n = input.len();
    if n < w {
        return Err(Error::InsufficientData(format!("series of {n} samples is shorter than window {w}")));
    }
    let offsets = n - w + 1;
    let mut sums = vec![0.0; n];
    let mut counts = vec![0u32; n];
    for block in (0..offsets).step_by(ROLLING_BLOCK) {
        let end = (block + ROLLING_BLOCK).min(offsets);
        let windows = (block..end)
            .map(|o| input.interleaved_window(o, w))
            .collect::<Result<Vec<_>>>()?;
        for (k, out) in model.predict(&windows)?.iter().enumerate() {
            let o = block + k;
            for (t, v) in out.rasterize(w).into_iter().enumerate() {
                sums[o + t] += v;
                counts[o + t] += 1;
            }
        }
    }
    let factor = cfg.correction();
    let values = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / f64::from(c) * factor)
        .collect();
    PowerSeries::new(input.start_time, input.period, values)
}

/// Regression metrics over every point, classification over consecutive
/// non-overlapping windows of `w` samples (the last one may be shorter).
/// A window is truly positive when it wholly contains an activation of the
/// ground truth.
pub fn evaluate_rolling(
    pred: &PowerSeries,
    truth: &PowerSeries,
    w: usize,
    threshold: f64,
    params: &ActivationParams,
) -> Result<EvalReport> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    if pred.start_time != truth.start_time || pred.period != truth.period {
        return Err(Error::InvalidArgument(format!(
            "prediction grid ({}, {} s) differs from truth grid ({}, {} s)",
            pred.start_time, pred.period, truth.start_time, truth.period
        )));
    }
    if w == 0 {
        return Err(Error::InvalidArgument("evaluation window 0".into()));
    }
    let acts = extract_activations(truth, params, "truth");
    let n = pred.len();
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for a in (0..n).step_by(w) {
        let b = (a + w).min(n);
        scores.push(pred.values[a..b].iter().copied().fold(f64::NEG_INFINITY, f64::max));
        labels.push(acts.iter().any(|x| x.start >= a && x.end <= b));
    }
    let predicted: Vec<bool> = scores.iter().map(|&s| s > threshold).collect();
    let roc = roc_auc(&scores, &labels).ok();
    Ok(EvalReport {
        procedure: Procedure::Rolling,
        appliance: None,
        model: None,
        split: None,
        n,
        windows: scores.len(),
        regression: regression_metrics(&pred.values, &truth.values, pred.period)?,
        classification: classification_metrics(&predicted, &labels)?,
        threshold,
        auc: roc.as_ref().map(|r| r.auc),
        roc: roc.map(|r| r.points).unwrap_or_default(),
    })
}
