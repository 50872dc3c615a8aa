//! On-disk dataset: a JSON manifest next to one CSV shard per split.
//!
//! Shard rows hold the flattened input (`x_*`, time-major), the target
//! series (`y_*`), the activation span (empty when absent), a synthetic flag
//! and the label.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::splits::{Dataset, DatasetInfo, Sample};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DATASET_FORMAT_VERSION: u32 = 1;
const SPLITS: [&str; 4] = ["train", "val", "test_i", "test_ii"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    #[serde(flatten)]
    pub info: DatasetInfo,
    /// Split name to shard file, relative to the manifest.
    pub shards: Vec<(String, String)>,
}

fn write_shard(path: &Path, samples: &[Sample], input_len: usize, window: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let mut header: Vec<String> = (0..input_len).map(|k| format!("x_{k}")).collect();
    header.extend((0..window).map(|k| format!("y_{k}")));
    header.extend(["span_start", "span_end", "synthetic", "label"].map(String::from));
    w.write_record(&header)?;
    for s in samples {
        let mut row: Vec<String> = s.input.iter().chain(&s.target).map(|v| v.to_string()).collect();
        match s.span {
            Some((a, b)) => row.extend([a.to_string(), b.to_string()]),
            None => row.extend([String::new(), String::new()]),
        }
        row.push(u8::from(s.synthetic).to_string());
        row.push(u8::from(s.label()).to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn read_shard(path: &Path, input_len: usize, window: usize) -> Result<Vec<Sample>> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let expected = input_len + window + 4;
    let mut out = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        let err = |m: String| Error::Parse {
            location: format!("{}: line {line}", path.display()),
            message: m,
        };
        if rec.len() != expected {
            return Err(err(format!("{} fields, expected {expected}", rec.len())));
        }
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|e| err(format!("column {}: {e}", i + 1)))
        };
        let input = (0..input_len).map(num).collect::<Result<Vec<_>>>()?;
        let target = (input_len..input_len + window).map(num).collect::<Result<Vec<_>>>()?;
        let base = input_len + window;
        let span = match (&rec[base], &rec[base + 1]) {
            ("", "") => None,
            (a, b) => Some((
                a.parse().map_err(|e| err(format!("span_start: {e}")))?,
                b.parse().map_err(|e| err(format!("span_end: {e}")))?,
            )),
        };
        let synthetic = &rec[base + 2] == "1";
        let label = &rec[base + 3] == "1";
        if label != span.is_some() {
            return Err(err("label disagrees with activation span".into()));
        }
        out.push(Sample {
            input,
            target,
            span,
            synthetic,
        });
    }
    Ok(out)
}

impl Dataset {
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let window = self.info.params.window;
        let input_len = window * self.info.params.channels.len();
        let mut shards = Vec::new();
        for (name, set) in SPLITS.iter().zip([&self.train, &self.val, &self.test_i, &self.test_ii]) {
            let file = format!("{name}.csv");
            write_shard(&dir.join(&file), set, input_len, window)?;
            shards.push((name.to_string(), file));
        }
        let manifest = DatasetManifest {
            format_version: DATASET_FORMAT_VERSION,
            info: self.info.clone(),
            shards,
        };
        fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: DatasetManifest = serde_json::from_slice(&fs::read(dir.join(MANIFEST_FILE))?)?;
        if manifest.format_version != DATASET_FORMAT_VERSION {
            return Err(Error::Version {
                found: manifest.format_version,
                expected: DATASET_FORMAT_VERSION,
            });
        }
        let window = manifest.info.params.window;
        let input_len = window * manifest.info.params.channels.len();
        let shard = |name: &str| -> Result<Vec<Sample>> {
            let file = manifest
                .shards
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, f)| f)
                .ok_or_else(|| Error::Corrupt(format!("manifest lists no `{name}` shard")))?;
            read_shard(&dir.join(file), input_len, window)
        };
        Ok(Dataset {
            train: shard("train")?,
            val: shard("val")?,
            test_i: shard("test_i")?,
            test_ii: shard("test_ii")?,
            info: manifest.info,
        })
    }
}
