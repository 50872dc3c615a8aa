//! Run ledger, grid search and model selection by validation AUC.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::run::{train_run_observed, EpochLog, RunConfig, RunResult, RunStatus};
use super::variant::ModelVariant;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::nn::{Algorithm, OptimizerConfig};
use crate::seed::derive_seed;
use crate::series::Appliance;

/// AUC assigned to runs whose validation windows are single-class.
pub const DEGENERATE_AUC: f64 = 0.5;

/// One line of the JSON-lines run ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub appliance: String,
    pub model: ModelVariant,
    pub optimizer: Algorithm,
    pub lr: f64,
    pub seed: u64,
    pub epochs: usize,
    pub best_iter: Option<usize>,
    pub best_val_loss: Option<f64>,
    pub val_auc: Option<f64>,
    pub threshold: Option<f64>,
    #[serde(flatten)]
    pub status: RunStatus,
    pub weights_path: Option<String>,
}

impl RunRecord {
    pub fn from_result(r: &RunResult, weights_path: Option<String>) -> Self {
        Self {
            appliance: r.config.appliance.name().to_string(),
            model: r.config.variant,
            optimizer: r.config.optimizer.algorithm,
            lr: r.config.optimizer.learning_rate,
            seed: r.config.seed,
            epochs: r.config.epochs,
            best_iter: r.best_epoch,
            best_val_loss: r.best_epoch.map(|_| r.best_val_loss),
            val_auc: r.val_auc,
            threshold: r.threshold,
            status: r.status.clone(),
            weights_path,
        }
    }

    /// Completed with retained weights.
    pub fn usable(&self) -> bool {
        self.status == RunStatus::Completed && self.best_iter.is_some()
    }

    pub fn auc_or_floor(&self) -> f64 {
        self.val_auc.unwrap_or(DEGENERATE_AUC)
    }
}

pub fn append_ledger(path: &Path, record: &RunRecord) -> Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    writeln!(f, "{}", serde_json::to_string(record)?)?;
    Ok(())
}

pub fn read_ledger(path: &Path) -> Result<Vec<RunRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            location: format!("{}:{}", path.display(), k + 1),
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_loss_curves<W: Write>(writer: W, history: &[EpochLog]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for log in history {
        w.serialize(log)?;
    }
    w.flush()?;
    Ok(())
}

/// Higher AUC first, then lower validation loss, then earlier position.
fn better(a: (f64, f64, usize), b: (f64, f64, usize)) -> Ordering {
    b.0.total_cmp(&a.0)
        .then(a.1.total_cmp(&b.1))
        .then(a.2.cmp(&b.2))
}

/// Index of the best usable record in grid order.
pub fn best_grid_point(records: &[RunRecord]) -> Option<usize> {
    records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.usable())
        .min_by(|(i, a), (j, b)| {
            better(
                (a.auc_or_floor(), a.best_val_loss.unwrap_or(f64::INFINITY), *i),
                (b.auc_or_floor(), b.best_val_loss.unwrap_or(f64::INFINITY), *j),
            )
        })
        .map(|(i, _)| i)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

pub struct GridResult {
    pub runs: Vec<RunResult>,
    pub best: usize,
    /// The chosen run does no better than a constant output.
    pub degenerate: bool,
}

impl GridResult {
    pub fn best_run(&self) -> &RunResult {
        &self.runs[self.best]
    }
}

pub fn run_configs(
    appliance: Appliance,
    variant: ModelVariant,
    grid: &[OptimizerConfig],
    params: &GridParams,
) -> Vec<RunConfig> {
    grid.iter()
        .enumerate()
        .map(|(k, opt)| RunConfig {
            appliance,
            variant,
            optimizer: *opt,
            epochs: params.epochs,
            batch_size: params.batch_size,
            seed: derive_seed(params.seed, variant.name(), k as u64),
        })
        .collect()
}

/// Train every grid point, up to `jobs` at once. Failed runs are returned
/// like the others.
pub fn train_grid(
    dataset: &Dataset,
    configs: &[RunConfig],
    jobs: usize,
    on_epoch: &(dyn Fn(&RunConfig, &EpochLog) + Sync),
) -> Result<Vec<RunResult>> {
    if configs.is_empty() {
        return Err(Error::Empty("optimizer grid"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        configs
            .par_iter()
            .map(|cfg| train_run_observed(cfg, dataset, &mut |log| on_epoch(cfg, log)))
            .collect()
    })
}

/// Pick the grid run with the largest validation AUC.
pub fn pick_grid_result(runs: Vec<RunResult>) -> Result<GridResult> {
    let records: Vec<RunRecord> = runs.iter().map(|r| RunRecord::from_result(r, None)).collect();
    let best = best_grid_point(&records).ok_or_else(|| {
        Error::InsufficientData(format!("all {} grid runs failed", runs.len()))
    })?;
    let degenerate = records[best].auc_or_floor() <= DEGENERATE_AUC;
    Ok(GridResult { runs, best, degenerate })
}

pub fn grid_search(
    dataset: &Dataset,
    configs: &[RunConfig],
    jobs: usize,
    on_epoch: &(dyn Fn(&RunConfig, &EpochLog) + Sync),
) -> Result<GridResult> {
    pick_grid_result(train_grid(dataset, configs, jobs, on_epoch)?)
}

/// Best grid point of one model for one appliance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionEntry {
    pub appliance: String,
    pub model: ModelVariant,
    pub val_auc: f64,
    pub val_loss: f64,
    pub weights_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SelectionTable {
    pub entries: Vec<SelectionEntry>,
}

impl SelectionTable {
    /// Reduce a ledger to its best grid point per (appliance, model).
    /// Later ledger lines come later in grid order.
    pub fn from_records(records: &[RunRecord]) -> Self {
        let mut groups: BTreeMap<(String, ModelVariant), Vec<RunRecord>> = BTreeMap::new();
        for r in records {
            groups.entry((r.appliance.clone(), r.model)).or_default().push(r.clone());
        }
        let entries = groups
            .into_iter()
            .filter_map(|((appliance, model), runs)| {
                let best = &runs[best_grid_point(&runs)?];
                Some(SelectionEntry {
                    appliance,
                    model,
                    val_auc: best.auc_or_floor(),
                    val_loss: best.best_val_loss.unwrap_or(f64::INFINITY),
                    weights_path: best.weights_path.clone(),
                })
            })
            .collect();
        Self { entries }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub appliance: String,
    pub model: ModelVariant,
    pub val_auc: f64,
    pub weights_path: Option<String>,
    pub degenerate: bool,
}

/// Per appliance, the model with the largest validation AUC; ties go to the
/// lower validation loss, then to the earlier model in the standard order.
pub fn select_best_model(table: &SelectionTable) -> Result<Vec<Selection>> {
    if table.entries.is_empty() {
        return Err(Error::Empty("selection table"));
    }
    let mut by_appliance: BTreeMap<&str, Vec<&SelectionEntry>> = BTreeMap::new();
    for e in &table.entries {
        by_appliance.entry(&e.appliance).or_default().push(e);
    }
    Ok(by_appliance
        .into_values()
        .map(|entries| {
            let best = entries
                .into_iter()
                .min_by(|a, b| {
                    better(
                        (a.val_auc, a.val_loss, a.model as usize),
                        (b.val_auc, b.val_loss, b.model as usize),
                    )
                })
                .expect("non-empty group");
            Selection {
                appliance: best.appliance.clone(),
                model: best.model,
                val_auc: best.val_auc,
                weights_path: best.weights_path.clone(),
                degenerate: best.val_auc <= DEGENERATE_AUC,
            }
        })
        .collect())
}
