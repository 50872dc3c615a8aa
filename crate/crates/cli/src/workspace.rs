//! Directory layout under the root, the artifact manifest, and loading of
//! recordings and trained models.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use nilm_core::dataset::{DatasetManifest, HouseRecording, MANIFEST_FILE};
use nilm_core::nn::Checkpoint;
use nilm_core::series::{read_series_csv, Appliance, MultivariateSeries, POWER_CHANNEL};
use nilm_core::training::{best_grid_point, read_ledger, ModelVariant, RunRecord, Selection};
use serde::{Deserialize, Serialize};

use crate::config::AppConfig;

/// A problem with the user's input rather than with running the pipeline.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

pub const CONFIG_FILE: &str = "nilm.json";
pub const WORKSPACE_MANIFEST: &str = "manifest.json";
pub const LEDGER_FILE: &str = "ledger.jsonl";
pub const SELECTION_FILE: &str = "selection.json";
pub const AGGREGATE_NAME: &str = "aggregate";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ArtifactManifest {
    pub format_version: u32,
    /// Root-relative path to the command that produced it.
    pub artifacts: BTreeMap<String, String>,
}

pub struct Workspace {
    pub root: PathBuf,
    pub config: AppConfig,
}

impl Workspace {
    pub fn open(root: &Path, config: Option<&Path>) -> Result<Self> {
        if !root.is_dir() {
            return Err(invalid(format!("root directory {} does not exist", root.display())));
        }
        let config = match config {
            Some(p) => {
                if !p.is_file() {
                    return Err(invalid(format!("config file {} does not exist", p.display())));
                }
                AppConfig::load(p)?
            }
            None if root.join(CONFIG_FILE).is_file() => AppConfig::load(&root.join(CONFIG_FILE))?,
            None => AppConfig::default(),
        };
        Ok(Self {
            root: root.to_path_buf(),
            config,
        })
    }

    pub fn path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    pub fn recordings(&self) -> PathBuf {
        self.path(&self.config.paths.recordings)
    }

    pub fn datasets(&self) -> PathBuf {
        self.path(&self.config.paths.datasets)
    }

    pub fn runs(&self) -> PathBuf {
        self.path(&self.config.paths.runs)
    }

    pub fn reports(&self) -> PathBuf {
        self.path(&self.config.paths.reports)
    }

    pub fn ledger(&self) -> PathBuf {
        self.runs().join(LEDGER_FILE)
    }

    pub fn dataset_dir(&self, appliance: Appliance, hf: bool) -> PathBuf {
        self.datasets()
            .join(format!("{}-{}", appliance.name(), if hf { "hf" } else { "lf" }))
    }

    /// Path relative to the root when it lies below it.
    pub fn relative(&self, p: &Path) -> String {
        p.strip_prefix(&self.root).unwrap_or(p).display().to_string()
    }

    /// Record produced files in the root manifest.
    pub fn register(&self, command: &str, paths: &[PathBuf]) -> Result<()> {
        let file = self.root.join(WORKSPACE_MANIFEST);
        let mut m: ArtifactManifest = if file.is_file() {
            serde_json::from_str(&fs::read_to_string(&file)?)
                .map_err(|e| invalid(format!("{}: {e}", file.display())))?
        } else {
            ArtifactManifest::default()
        };
        m.format_version = 1;
        for p in paths {
            m.artifacts.insert(self.relative(p), command.to_string());
        }
        fs::write(&file, serde_json::to_string_pretty(&m)? + "\n")?;
        Ok(())
    }

    pub fn dataset_manifest(&self, appliance: Appliance, hf: bool) -> Result<DatasetManifest> {
        let file = self.dataset_dir(appliance, hf).join(MANIFEST_FILE);
        if !file.is_file() {
            return Err(invalid(format!(
                "no dataset at {} (run `nilm dataset build --appliance {}{}` first)",
                file.display(),
                appliance.name(),
                if hf { " --hf" } else { "" }
            )));
        }
        Ok(serde_json::from_str(&fs::read_to_string(&file)?)?)
    }

    pub fn read_ledger(&self) -> Result<Vec<RunRecord>> {
        let path = self.ledger();
        if !path.is_file() {
            return Err(invalid(format!("no run ledger at {} (run `nilm train` first)", path.display())));
        }
        Ok(read_ledger(&path)?)
    }
}

pub fn read_series_file(path: &Path) -> Result<Vec<MultivariateSeries>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_series_csv(std::io::BufReader::new(file), None).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

/// Overlap of two series on a shared grid, as `(offset_a, offset_b, len)`.
pub fn overlap(a: &MultivariateSeries, b: &MultivariateSeries) -> Result<Option<(usize, usize, usize)>> {
    if (a.period - b.period).abs() > 1e-9 {
        return Err(invalid(format!("periods differ: {} vs {} s", a.period, b.period)));
    }
    let shift = (b.start_time - a.start_time) / a.period;
    if (shift - shift.round()).abs() > 1e-6 {
        return Err(invalid(format!(
            "grids are offset by a fraction of a sample ({} s vs {} s start)",
            a.start_time, b.start_time
        )));
    }
    let shift = shift.round() as i64;
    let (oa, ob) = if shift >= 0 { (shift as usize, 0) } else { (0, (-shift) as usize) };
    if oa >= a.len() || ob >= b.len() {
        return Ok(None);
    }
    let len = (a.len() - oa).min(b.len() - ob);
    Ok(Some((oa, ob, len)))
}

/// Houses under `dir`, one subdirectory each, holding `aggregate.csv` and
/// `<appliance>.csv` submeter files. Gap-split pieces become separate
/// recordings covering the time where the target submeter is present.
pub fn load_recordings(dir: &Path, target: Appliance, hf: bool) -> Result<Vec<HouseRecording>> {
    if !dir.is_dir() {
        return Err(invalid(format!("recordings directory {} does not exist", dir.display())));
    }
    let mut houses: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    houses.sort();
    let mut out = Vec::new();
    for house_dir in houses {
        let house = house_dir.file_name().unwrap().to_string_lossy().to_string();
        let agg_file = house_dir.join(format!("{AGGREGATE_NAME}.csv"));
        let target_file = house_dir.join(format!("{}.csv", target.name()));
        if !agg_file.is_file() || !target_file.is_file() {
            continue;
        }
        let aggregates = read_series_file(&agg_file)?;
        let mut meters: BTreeMap<Appliance, Vec<MultivariateSeries>> = BTreeMap::new();
        for app in Appliance::ALL {
            let f = house_dir.join(format!("{}.csv", app.name()));
            if f.is_file() {
                meters.insert(app, read_series_file(&f)?);
            }
        }
        for agg in &aggregates {
            let agg = if hf {
                if agg.channels().len() != 3 {
                    return Err(invalid(format!(
                        "{}: high-frequency dataset needs form factor and phase shift columns",
                        agg_file.display()
                    )));
                }
                agg.clone()
            } else {
                agg.select(&[POWER_CHANNEL])?
            };
            for piece in &meters[&target] {
                let Some((oa, ob, len)) = overlap(&agg, piece)? else {
                    continue;
                };
                let aggregate = agg.sub_series(oa, oa + len)?;
                let mut submeters = BTreeMap::new();
                submeters.insert(target.name().to_string(), piece.power()[ob..ob + len].to_vec());
                for (app, pieces) in &meters {
                    if *app == target {
                        continue;
                    }
                    for p in pieces {
                        if let Some((o1, o2, l)) = overlap(&aggregate, p)? {
                            if o1 == 0 && l == len {
                                submeters.insert(app.name().to_string(), p.power()[o2..o2 + l].to_vec());
                            }
                        }
                    }
                }
                out.push(HouseRecording::new(&house, aggregate, submeters)?);
            }
        }
    }
    if out.is_empty() {
        return Err(invalid(format!(
            "no house under {} has both {AGGREGATE_NAME}.csv and {}.csv",
            dir.display(),
            target.name()
        )));
    }
    Ok(out)
}

/// A trained model ready for evaluation.
pub struct LoadedModel {
    pub label: String,
    pub checkpoint: Checkpoint,
    pub threshold: Option<f64>,
    pub weights: PathBuf,
}

/// Explicit weights, the best grid point of one model, or the selected model
/// for the appliance, in that order of preference.
pub fn resolve_model(
    ws: &Workspace,
    appliance: Appliance,
    model: Option<ModelVariant>,
    weights: Option<&Path>,
) -> Result<LoadedModel> {
    let load = |label: String, path: PathBuf, threshold: Option<f64>| -> Result<LoadedModel> {
        if !path.is_file() {
            return Err(invalid(format!("weights file {} does not exist", path.display())));
        }
        let checkpoint = Checkpoint::load(&path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Ok(LoadedModel {
            label,
            checkpoint,
            threshold,
            weights: path,
        })
    };
    if let Some(w) = weights {
        let path = ws.path(w);
        let rel = ws.relative(&path);
        let known = ws
            .ledger()
            .is_file()
            .then(|| ws.read_ledger())
            .transpose()?
            .unwrap_or_default()
            .into_iter()
            .find(|r| r.weights_path.as_deref() == Some(rel.as_str()));
        let label = known.as_ref().map_or_else(|| "custom".to_string(), |r| r.model.to_string());
        return load(label, path, known.and_then(|r| r.threshold));
    }
    if let Some(m) = model {
        let records: Vec<RunRecord> = ws
            .read_ledger()?
            .into_iter()
            .filter(|r| r.appliance == appliance.name() && r.model == m)
            .collect();
        let best = best_grid_point(&records)
            .ok_or_else(|| invalid(format!("no completed `{m}` run for {} in the ledger", appliance.name())))?;
        let r = &records[best];
        let path = r.weights_path.as_deref().ok_or_else(|| invalid("ledger entry has no weights"))?;
        return load(m.to_string(), ws.path(Path::new(path)), r.threshold);
    }
    let sel_file = ws.runs().join(SELECTION_FILE);
    if !sel_file.is_file() {
        return Err(invalid(format!(
            "no {} (run `nilm select`, or pass --model or --weights)",
            sel_file.display()
        )));
    }
    let selections: Vec<Selection> = serde_json::from_str(&fs::read_to_string(&sel_file)?)
        .map_err(|e| invalid(format!("{}: {e}", sel_file.display())))?;
    let s = selections
        .iter()
        .find(|s| s.appliance == appliance.name())
        .ok_or_else(|| invalid(format!("no selected model for {}", appliance.name())))?;
    resolve_model(ws, appliance, Some(s.model), None)
}

/// Whether a network input with `channels` channels uses the descriptor
/// channels.
pub fn is_hf(channels: usize) -> bool {
    channels == 3
}

#[cfg(test)]
mod tests {
    use super::*;
    use nilm_core::series::Channel;

    fn series(start: f64, n: usize) -> MultivariateSeries {
        MultivariateSeries::new(
            start,
            6.0,
            vec![Channel {
                name: POWER_CHANNEL.into(),
                values: (0..n).map(|k| k as f64).collect(),
            }],
        )
        .unwrap()
    }

    #[test]
    fn overlaps() {
        assert_eq!(overlap(&series(0.0, 10), &series(12.0, 10)).unwrap(), Some((2, 0, 8)));
        assert_eq!(overlap(&series(12.0, 10), &series(0.0, 5)).unwrap(), Some((0, 2, 3)));
        assert_eq!(overlap(&series(0.0, 10), &series(60.0, 10)).unwrap(), None);
        assert!(overlap(&series(0.0, 10), &series(3.0, 10)).is_err());
    }
}
