//! JSON application config. Every field has a default, so an empty object
//! (or no file at all) is a valid config.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use nilm_core::dataset::{ActivationParams, AugmentParams};
use nilm_core::nn::{Algorithm, OptimizerConfig};
use nilm_core::series::{Appliance, CANONICAL_PERIOD_S};
use nilm_core::training::{default_grid, DEFAULT_BATCH_SIZE, DEFAULT_EPOCHS};
use serde::{Deserialize, Serialize};

use crate::workspace::invalid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub recordings: PathBuf,
    pub datasets: PathBuf,
    pub runs: PathBuf,
    pub reports: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            recordings: "recordings".into(),
            datasets: "datasets".into(),
            runs: "runs".into(),
            reports: "reports".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApplianceEntry {
    pub name: Appliance,
    #[serde(default)]
    pub window_minutes: Option<u32>,
    #[serde(default)]
    pub activation: Option<ActivationParams>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridEntry {
    pub algorithm: Algorithm,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisSettings {
    pub enabled: bool,
    pub p: f64,
    pub ratio: f64,
}

impl Default for SynthesisSettings {
    fn default() -> Self {
        let a = AugmentParams::default();
        Self {
            enabled: true,
            p: a.p,
            ratio: a.ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSettings {
    pub epochs: usize,
    pub batch_size: usize,
    pub jobs: usize,
    pub retries: usize,
}

impl Default for TrainingSettings {
    fn default() -> Self {
        Self {
            epochs: DEFAULT_EPOCHS,
            batch_size: DEFAULT_BATCH_SIZE,
            jobs: 1,
            retries: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSettings {
    pub test_house: String,
    pub test_ii_days: f64,
    pub train_fraction: f64,
}

impl Default for DatasetSettings {
    fn default() -> Self {
        Self {
            test_house: "house_1".into(),
            test_ii_days: 14.0,
            train_fraction: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub paths: Paths,
    /// Per-appliance overrides; appliances not listed use built-in values.
    pub appliances: Vec<ApplianceEntry>,
    pub synthesis: SynthesisSettings,
    pub grid: Vec<GridEntry>,
    pub training: TrainingSettings,
    pub dataset: DatasetSettings,
    pub seed: u64,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            paths: Paths::default(),
            appliances: Vec::new(),
            synthesis: SynthesisSettings::default(),
            grid: default_grid()
                .into_iter()
                .map(|c| GridEntry {
                    algorithm: c.algorithm,
                    learning_rate: c.learning_rate,
                })
                .collect(),
            training: TrainingSettings::default(),
            dataset: DatasetSettings::default(),
            seed: 0,
        }
    }
}

impl AppConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: AppConfig = serde_json::from_str(&text)
            .map_err(|e| invalid(format!("config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for e in &self.appliances {
            if !seen.insert(e.name) {
                return Err(invalid(format!("appliance `{}` listed twice in config", e.name.name())));
            }
            if let Some(a) = &e.activation {
                a.validate().map_err(|err| invalid(format!("{}: {err}", e.name.name())))?;
            }
            if e.window_minutes == Some(0) {
                return Err(invalid(format!("{}: window_minutes must be > 0", e.name.name())));
            }
        }
        if self.grid.is_empty() {
            return Err(invalid("optimizer grid is empty"));
        }
        for g in self.optimizer_grid() {
            g.validate().map_err(|e| invalid(e.to_string()))?;
        }
        let t = &self.training;
        if t.epochs == 0 || t.batch_size == 0 || t.jobs == 0 {
            return Err(invalid("training epochs, batch_size and jobs must be > 0"));
        }
        let s = &self.synthesis;
        if !(0.0..=1.0).contains(&s.p) || !(s.ratio >= 0.0) {
            return Err(invalid("synthesis needs p in [0, 1] and ratio >= 0"));
        }
        let d = &self.dataset;
        if d.test_house.is_empty() || !(d.test_ii_days >= 0.0) || !(d.train_fraction > 0.0 && d.train_fraction < 1.0) {
            return Err(invalid("dataset needs a test house, test_ii_days >= 0 and train_fraction in (0, 1)"));
        }
        Ok(())
    }

    pub fn optimizer_grid(&self) -> Vec<OptimizerConfig> {
        self.grid
            .iter()
            .map(|g| OptimizerConfig::new(g.algorithm, g.learning_rate))
            .collect()
    }

    fn entry(&self, appliance: Appliance) -> Option<&ApplianceEntry> {
        self.appliances.iter().find(|e| e.name == appliance)
    }

    pub fn activation(&self, appliance: Appliance) -> ActivationParams {
        self.entry(appliance)
            .and_then(|e| e.activation)
            .unwrap_or_else(|| ActivationParams::for_appliance(appliance))
    }

    /// Window in samples on the canonical grid.
    pub fn window(&self, appliance: Appliance) -> usize {
        let minutes = self
            .entry(appliance)
            .and_then(|e| e.window_minutes)
            .unwrap_or_else(|| appliance.window_minutes());
        (f64::from(minutes) * 60.0 / CANONICAL_PERIOD_S).round() as usize
    }

    pub fn augment(&self) -> Option<AugmentParams> {
        self.synthesis.enabled.then_some(AugmentParams {
            p: self.synthesis.p,
            ratio: self.synthesis.ratio,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        let cfg: AppConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, AppConfig::default());
        cfg.validate().unwrap();
        assert_eq!(cfg.window(Appliance::Kettle), 130);
        assert_eq!(cfg.optimizer_grid().len(), 6);
    }

    #[test]
    fn rejects_duplicates_and_unknown_keys() {
        let dup = r#"{"appliances": [{"name": "kettle"}, {"name": "kettle", "window_minutes": 5}]}"#;
        let cfg: AppConfig = serde_json::from_str(dup).unwrap();
        assert!(cfg.validate().is_err());
        assert!(serde_json::from_str::<AppConfig>(r#"{"sede": 3}"#).is_err());
        let over = r#"{"appliances": [{"name": "microwave", "window_minutes": 5}]}"#;
        let cfg: AppConfig = serde_json::from_str(over).unwrap();
        assert_eq!(cfg.window(Appliance::Microwave), 50);
    }
}
