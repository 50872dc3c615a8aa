//! Input standardization and target scaling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    /// Per channel: mean over training windows of the window's own standard
    /// deviation.
    pub sigma_input: Vec<f64>,
    /// Largest target power seen in training (W).
    pub max_target: f64,
}

impl NormStats {
    pub fn validate(&self) -> Result<()> {
        if self.sigma_input.is_empty() || self.sigma_input.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::DegenerateSignal(format!(
                "sigma_input {:?} must be positive",
                self.sigma_input
            )));
        }
        if !(self.max_target > 0.0) || !self.max_target.is_finite() {
            return Err(Error::DegenerateSignal(format!(
                "max_target {} must be positive",
                self.max_target
            )));
        }
        Ok(())
    }

    pub fn channels(&self) -> usize {
        self.sigma_input.len()
    }
}

fn mean_std(x: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = x.clone().count() as f64;
    let mean = x.clone().sum::<f64>() / n;
    let var = x.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Statistics from training windows (time-major, `W·C` values each) and
/// the largest value among their targets.
pub fn compute_norm_stats<'a>(
    windows: impl IntoIterator<Item = &'a [f64]>,
    channels: usize,
    max_target: f64,
) -> Result<NormStats> {
    if channels == 0 {
        return Err(Error::InvalidArgument("zero channels".into()));
    }
    let mut sums = vec![0.0; channels];
    let mut count = 0usize;
    for w in windows {
        if w.is_empty() || w.len() % channels != 0 {
            return Err(Error::ShapeMismatch(format!(
                "window of {} values is not a multiple of {channels} channels",
                w.len()
            )));
        }
        for (c, s) in sums.iter_mut().enumerate() {
            *s += mean_std(w.iter().skip(c).step_by(channels).copied()).1;
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::Empty("training windows"));
    }
    let stats = NormStats {
        sigma_input: sums.into_iter().map(|s| s / count as f64).collect(),
        max_target,
    };
    stats.validate()?;
    Ok(stats)
}

/// Subtract each channel's window mean and divide by that channel's sigma.
pub fn preprocess_input(window: &[f64], stats: &NormStats) -> Result<Vec<f64>> {
    let c = stats.channels();
    if window.is_empty() || window.len() % c != 0 {
        return Err(Error::ShapeMismatch(format!(
            "window of {} values for {c} channels",
            window.len()
        )));
    }
    let mut out = window.to_vec();
    for ch in 0..c {
        let (mean, _) = mean_std(window.iter().skip(ch).step_by(c).copied());
        for v in out.iter_mut().skip(ch).step_by(c) {
            *v = (*v - mean) / stats.sigma_input[ch];
        }
    }
    Ok(out)
}

pub fn scale_target(y: f64, stats: &NormStats) -> f64 {
    y / stats.max_target
}

pub fn unscale_output(y: f64, stats: &NormStats) -> f64 {
    y * stats.max_target
}
