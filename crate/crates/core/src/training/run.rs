//! One training run: a model variant, an optimizer setting and a seed.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::variant::ModelVariant;
use crate::dataset::{preprocess_input, scale_target, Dataset, NormStats, Sample};
use crate::error::{Error, Result};
use crate::evaluation::{activation_scores, choose_threshold_max_f1, roc_auc};
use crate::nn::{build_architecture, Checkpoint, Network, Optimizer, OptimizerConfig, Tensor};
use crate::seed::{derive_seed, derived_rng};
use crate::series::Appliance;

pub const DEFAULT_EPOCHS: usize = 200;
pub const DEFAULT_BATCH_SIZE: usize = 64;
const EVAL_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub appliance: Appliance,
    pub variant: ModelVariant,
    pub optimizer: OptimizerConfig,
    /// One epoch is a full pass over the training windows.
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(appliance: Appliance, variant: ModelVariant, optimizer: OptimizerConfig, seed: u64) -> Self {
        Self {
            appliance,
            variant,
            optimizer,
            epochs: DEFAULT_EPOCHS,
            batch_size: DEFAULT_BATCH_SIZE,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config(format!(
                "epochs ({}) and batch size ({}) must be positive",
                self.epochs, self.batch_size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Failed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: RunConfig,
    pub status: RunStatus,
    pub history: Vec<EpochLog>,
    /// Epoch of the retained weights.
    pub best_epoch: Option<usize>,
    pub best_val_loss: f64,
    /// Activations-style AUC of the retained weights on validation windows.
    pub val_auc: Option<f64>,
    /// Detection threshold (W) maximizing validation F1.
    pub threshold: Option<f64>,
    pub checkpoint: Option<Checkpoint>,
}

impl RunResult {
    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed
    }
}

/// Normalized inputs and targets laid out for batching.
pub struct TrainingSet {
    inputs: Vec<f32>,
    targets: Vec<f32>,
    input_dims: Vec<usize>,
    target_dims: Vec<usize>,
}

impl TrainingSet {
    pub fn new(samples: &[&Sample], norm: &NormStats, autoencoder: bool, window: usize, channels: usize) -> Result<Self> {
        let target_dims = if autoencoder { vec![window, 1] } else { vec![3] };
        let mut inputs = Vec::with_capacity(samples.len() * window * channels);
        let mut targets = Vec::with_capacity(samples.len() * target_dims.iter().product::<usize>());
        for s in samples {
            if s.input.len() != window * channels || s.target.len() != window {
                return Err(Error::ShapeMismatch(format!(
                    "sample with {} inputs and {} targets, expected {}×{channels} and {window}",
                    s.input.len(),
                    s.target.len(),
                    window
                )));
            }
            inputs.extend(preprocess_input(&s.input, norm)?.into_iter().map(|v| v as f32));
            if autoencoder {
                targets.extend(s.target.iter().map(|&y| scale_target(y, norm) as f32));
            } else {
                let [a, b, p] = s.rectangle();
                targets.extend([a as f32, b as f32, scale_target(p, norm) as f32]);
            }
        }
        Ok(Self {
            inputs,
            targets,
            input_dims: vec![window, channels],
            target_dims,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len() / self.target_dims.iter().product::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn batch(&self, idx: &[usize]) -> Result<(Tensor<f32>, Tensor<f32>)> {
        let gather = |data: &[f32], dims: &[usize]| {
            let row: usize = dims.iter().product();
            let mut out = Vec::with_capacity(idx.len() * row);
            for &i in idx {
                out.extend_from_slice(&data[i * row..(i + 1) * row]);
            }
            let mut shape = vec![idx.len()];
            shape.extend_from_slice(dims);
            Tensor::new(shape, out)
        };
        Ok((
            gather(&self.inputs, &self.input_dims)?,
            gather(&self.targets, &self.target_dims)?,
        ))
    }

    /// Mean squared error of `net` over the whole set.
    pub fn loss(&self, net: &Network<f32>) -> Result<f64> {
        let n = self.len();
        let mut sum = 0.0;
        let mut count = 0usize;
        for start in (0..n).step_by(EVAL_CHUNK) {
            let idx: Vec<usize> = (start..(start + EVAL_CHUNK).min(n)).collect();
            let (x, y) = self.batch(&idx)?;
            let out = net.forward(&x)?;
            sum += crate::nn::mse(out.data(), y.data()) * y.len() as f64;
            count += y.len();
        }
        Ok(if count == 0 { 0.0 } else { sum / count as f64 })
    }
}

/// Training windows seen by a variant: synthetic ones only for the
/// synthetic-data variants.
pub fn training_samples(dataset: &Dataset, variant: ModelVariant) -> Result<Vec<&Sample>> {
    let samples: Vec<&Sample> = dataset
        .train
        .iter()
        .filter(|s| variant.uses_synthetic() || !s.synthetic)
        .collect();
    if variant.uses_synthetic() && !samples.iter().any(|s| s.synthetic) {
        return Err(Error::Config(format!(
            "model `{variant}` needs a dataset built with synthetic augmentation"
        )));
    }
    if samples.is_empty() {
        return Err(Error::Empty("training windows"));
    }
    Ok(samples)
}

pub fn train_run(cfg: &RunConfig, dataset: &Dataset) -> Result<RunResult> {
    train_run_observed(cfg, dataset, &mut |_| {})
}

/// Minibatch MSE training, keeping the weights with the lowest validation
/// loss. A non-finite loss or update ends the run as failed.
pub fn train_run_observed(
    cfg: &RunConfig,
    dataset: &Dataset,
    on_epoch: &mut dyn FnMut(&EpochLog),
) -> Result<RunResult> {
    cfg.validate()?;
    let kind = cfg.variant.architecture();
    let w = dataset.info.params.window;
    let c = dataset.info.params.channels.len();
    if c != kind.input_channels() {
        return Err(Error::Config(format!(
            "model `{}` takes {} input channels, dataset has {c}",
            cfg.variant,
            kind.input_channels()
        )));
    }
    if dataset.info.params.appliance != cfg.appliance {
        return Err(Error::Config(format!(
            "dataset is for {}, run is for {}",
            dataset.info.params.appliance.name(),
            cfg.appliance.name()
        )));
    }
    let norm = &dataset.info.norm;
    let train = TrainingSet::new(&training_samples(dataset, cfg.variant)?, norm, kind.is_autoencoder(), w, c)?;
    let val_refs: Vec<&Sample> = dataset.val.iter().collect();
    if val_refs.is_empty() {
        return Err(Error::Empty("validation windows"));
    }
    let val = TrainingSet::new(&val_refs, norm, kind.is_autoencoder(), w, c)?;

    let spec = build_architecture(kind, w, c)?;
    let init_seed = derive_seed(cfg.seed, "network", 0);
    let mut net = Network::<f32>::new(spec, init_seed)?;
    let mut opt = Optimizer::new(cfg.optimizer, &net)?;

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, Network<f32>)> = None;
    let mut status = RunStatus::Completed;
    let mut order: Vec<usize> = (0..train.len()).collect();

    'epochs: for epoch in 1..=cfg.epochs {
        order.shuffle(&mut derived_rng(cfg.seed, "shuffle", epoch as u64));
        let mut sum = 0.0;
        for idx in order.chunks(cfg.batch_size) {
            let (x, y) = train.batch(idx)?;
            let step = net
                .loss_and_gradients(&x, &y)
                .and_then(|(loss, grads)| opt.step(&mut net, &grads).map(|()| loss));
            match step {
                Ok(loss) => sum += loss * idx.len() as f64,
                Err(Error::NonFinite(what)) => {
                    status = RunStatus::Failed(format!("diverged in epoch {epoch}: non-finite {what}"));
                    break 'epochs;
                }
                Err(e) => return Err(e),
            }
        }
        let log = EpochLog {
            epoch,
            train_loss: sum / train.len() as f64,
            val_loss: val.loss(&net)?,
        };
        if !log.val_loss.is_finite() {
            status = RunStatus::Failed(format!("diverged in epoch {epoch}: non-finite validation loss"));
            history.push(log);
            break;
        }
        on_epoch(&log);
        history.push(log);
        if best.as_ref().map_or(true, |b| log.val_loss < b.1) {
            best = Some((epoch, log.val_loss, net.clone()));
        }
    }

    let mut result = RunResult {
        config: *cfg,
        status,
        history,
        best_epoch: None,
        best_val_loss: f64::INFINITY,
        val_auc: None,
        threshold: None,
        checkpoint: None,
    };
    if let Some((epoch, loss, network)) = best {
        let ckpt = Checkpoint {
            network,
            norm: norm.clone(),
            seed: init_seed,
        };
        let (scores, labels) = activation_scores(&ckpt, &dataset.val)?;
        result.val_auc = roc_auc(&scores, &labels).ok().map(|r| r.auc);
        result.threshold = choose_threshold_max_f1(&scores, &labels).ok();
        result.best_epoch = Some(epoch);
        result.best_val_loss = loss;
        result.checkpoint = Some(ckpt);
    }
    Ok(result)
}
