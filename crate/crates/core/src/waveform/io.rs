//! Raw waveform files and feature-matrix CSVs.
//!
//! A waveform lives in two files: a JSON sidecar
//! `{fs_hz, f0_hz, channels: ["voltage", "current"], start_unix_s}` and a
//! binary payload of little-endian `f32` samples interleaved `v, i, v, i, …`.
//! The payload path is the sidecar path with a `.bin` extension unless the
//! sidecar names one explicitly.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::WaveformRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformSidecar {
    pub fs_hz: f64,
    pub f0_hz: f64,
    pub channels: Vec<String>,
    pub start_unix_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
}

fn payload_path(sidecar_path: &Path, sidecar: &WaveformSidecar) -> PathBuf {
    match &sidecar.payload {
        Some(p) => sidecar_path.with_file_name(p),
        None => sidecar_path.with_extension("bin"),
    }
}

pub fn parse_sidecar(text: &str) -> Result<WaveformSidecar> {
    let sc: WaveformSidecar = serde_json::from_str(text).map_err(|e| Error::Parse {
        location: format!("sidecar line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    if sc.channels != ["voltage", "current"] {
        return Err(Error::Parse {
            location: "sidecar `channels`".into(),
            message: format!("expected [\"voltage\", \"current\"], found {:?}", sc.channels),
        });
    }
    if !(sc.fs_hz > 0.0) || !(sc.f0_hz > 0.0) {
        return Err(Error::Parse {
            location: "sidecar".into(),
            message: "fs_hz and f0_hz must be positive".into(),
        });
    }
    Ok(sc)
}

/// Decode an interleaved `v, i` little-endian f32 payload.
pub fn decode_payload(bytes: &[u8]) -> Result<(Vec<f64>, Vec<f64>)> {
    if bytes.len() % 8 != 0 {
        return Err(Error::Corrupt(format!(
            "payload length {} is not a multiple of 8 bytes; trailing data starts at byte {}",
            bytes.len(),
            bytes.len() - bytes.len() % 8
        )));
    }
    let mut v = Vec::with_capacity(bytes.len() / 8);
    let mut i = Vec::with_capacity(bytes.len() / 8);
    for (k, pair) in bytes.chunks_exact(8).enumerate() {
        let a = f32::from_le_bytes(pair[..4].try_into().unwrap());
        let b = f32::from_le_bytes(pair[4..].try_into().unwrap());
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::Corrupt(format!("non-finite sample at byte {}", k * 8)));
        }
        v.push(f64::from(a));
        i.push(f64::from(b));
    }
    Ok((v, i))
}

pub fn encode_payload(voltage: &[f64], current: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(voltage.len() * 8);
    for (v, i) in voltage.iter().zip(current) {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
        out.extend_from_slice(&(*i as f32).to_le_bytes());
    }
    out
}

pub fn read_waveform(sidecar_path: &Path) -> Result<WaveformRecord> {
    let sc = parse_sidecar(&fs::read_to_string(sidecar_path)?)?;
    let bytes = fs::read(payload_path(sidecar_path, &sc))?;
    let (v, i) = decode_payload(&bytes)?;
    let mut rec = WaveformRecord::new(sc.fs_hz, sc.f0_hz, v, i, sc.label)?;
    rec.start_unix_s = sc.start_unix_s;
    Ok(rec)
}

pub fn write_waveform(sidecar_path: &Path, rec: &WaveformRecord) -> Result<()> {
    let sc = WaveformSidecar {
        fs_hz: rec.fs,
        f0_hz: rec.f0,
        channels: vec!["voltage".into(), "current".into()],
        start_unix_s: rec.start_unix_s,
        label: rec.label.clone(),
        payload: None,
    };
    fs::write(sidecar_path, serde_json::to_string_pretty(&sc)?)?;
    fs::write(
        payload_path(sidecar_path, &sc),
        encode_payload(&rec.voltage, &rec.current),
    )?;
    Ok(())
}

/// Labelled feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<String>,
}

impl FeatureMatrix {
    /// Labels mapped to dense class indices (sorted label order).
    pub fn encoded_labels(&self) -> (Vec<usize>, Vec<String>) {
        let mut classes: Vec<String> = self.labels.clone();
        classes.sort();
        classes.dedup();
        let y = self
            .labels
            .iter()
            .map(|l| classes.binary_search(l).unwrap())
            .collect();
        (y, classes)
    }

    /// Restrict to the columns whose names satisfy `keep`.
    pub fn select_columns(&self, keep: impl Fn(&str) -> bool) -> FeatureMatrix {
        let idx: Vec<usize> = (0..self.names.len()).filter(|&k| keep(&self.names[k])).collect();
        FeatureMatrix {
            names: idx.iter().map(|&k| self.names[k].clone()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| idx.iter().map(|&k| r[k]).collect())
                .collect(),
            labels: self.labels.clone(),
        }
    }
}

pub fn write_feature_matrix<W: Write>(writer: W, m: &FeatureMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = m.names.clone();
    header.push("label".into());
    w.write_record(&header)?;
    for (row, label) in m.rows.iter().zip(&m.labels) {
        let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
        rec.push(label.clone());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_feature_matrix<R: Read>(reader: R) -> Result<FeatureMatrix> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.last().map(String::as_str) != Some("label") {
        return Err(Error::Parse {
            location: "line 1".into(),
            message: "final column must be `label`".into(),
        });
    }
    let names = header[..header.len() - 1].to_vec();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .take(names.len())
            .enumerate()
            .map(|(c, f)| {
                f.parse::<f64>().map_err(|_| Error::Parse {
                    location: format!("line {}, column {}", k + 2, c + 1),
                    message: format!("not a number: `{f}`"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
        labels.push(rec[names.len()].to_string());
    }
    Ok(FeatureMatrix {
        names,
        rows,
        labels,
    })
}
