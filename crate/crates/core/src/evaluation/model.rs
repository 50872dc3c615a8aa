//! Window-level model interface used by both evaluation procedures.

use rayon::prelude::*;

use crate::dataset::preprocess_input;
use crate::error::{Error, Result};
use crate::nn::{Checkpoint, Tensor};

/// One window's prediction in physical units.
#[derive(Debug, Clone, PartialEq)]
pub enum WindowOutput {
    /// Appliance power per sample (W).
    Series(Vec<f64>),
    /// `(start / W, end / W, power in W)`.
    Rectangle([f64; 3]),
}

impl WindowOutput {
    /// Power series over a window of `w` samples; a rectangle covers
    /// `[round(start·w), round(end·w))`.
    pub fn rasterize(&self, w: usize) -> Vec<f64> {
        match self {
            WindowOutput::Series(s) => s.clone(),
            WindowOutput::Rectangle([s, e, p]) => {
                let clamp = |f: f64| ((f * w as f64).round().max(0.0) as usize).min(w);
                let (a, b) = (clamp(*s), clamp(*e));
                let mut out = vec![0.0; w];
                if b > a {
                    out[a..b].iter_mut().for_each(|v| *v = *p);
                }
                out
            }
        }
    }
}

/// Detection score of a window: the peak predicted power.
pub fn window_score(output: &WindowOutput) -> f64 {
    match output {
        WindowOutput::Series(s) => s.iter().copied().reduce(f64::max).unwrap_or(0.0),
        WindowOutput::Rectangle([s, e, p]) => {
            if e > s {
                *p
            } else {
                0.0
            }
        }
    }
}

pub trait WindowModel: Sync {
    fn window(&self) -> usize;
    fn channels(&self) -> usize;
    /// Predict raw time-major windows of `window()·channels()` values.
    fn predict(&self, windows: &[Vec<f64>]) -> Result<Vec<WindowOutput>>;
}

const PREDICT_CHUNK: usize = 256;

impl WindowModel for Checkpoint {
    fn window(&self) -> usize {
        self.network.spec().window
    }

    fn channels(&self) -> usize {
        self.network.spec().channels
    }

    fn predict(&self, windows: &[Vec<f64>]) -> Result<Vec<WindowOutput>> {
        let (w, c) = (self.window(), self.channels());
        let autoencoder = self.network.spec().kind.is_autoencoder();
        let max_target = self.norm.max_target;
        let chunks: Vec<Vec<WindowOutput>> = windows
            .par_chunks(PREDICT_CHUNK)
            .map(|chunk| {
                let mut data = Vec::with_capacity(chunk.len() * w * c);
                for win in chunk {
                    if win.len() != w * c {
                        return Err(Error::ShapeMismatch(format!(
                            "window of {} values, model takes {w}×{c}",
                            win.len()
                        )));
                    }
                    data.extend(preprocess_input(win, &self.norm)?.into_iter().map(|v| v as f32));
                }
                let x = Tensor::new(vec![chunk.len(), w, c], data)?;
                let y = self.network.forward(&x)?;
                Ok((0..chunk.len())
                    .map(|b| {
                        let row = y.row(b);
                        if autoencoder {
                            WindowOutput::Series(row.iter().map(|&v| f64::from(v) * max_target).collect())
                        } else {
                            WindowOutput::Rectangle([
                                f64::from(row[0]),
                                f64::from(row[1]),
                                f64::from(row[2]) * max_target,
                            ])
                        }
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        Ok(chunks.into_iter().flatten().collect())
    }
}
