//! Uniformly sampled power series, resampling and windowing.
//!
//! Every series in the pipeline lives on an implicit grid
//! `start_time + i * period`. Gaps are never represented inside a series;
//! ingestion splits the input at gaps instead.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical sampling period of every series fed to the models.
pub const CANONICAL_PERIOD_S: f64 = 6.0;

pub const POWER_CHANNEL: &str = "power_w";
pub const FORM_FACTOR_CHANNEL: &str = "form_factor";
pub const PHASE_SHIFT_CHANNEL: &str = "phase_shift_rad";

const LF_HEADER: [&str; 2] = ["timestamp_unix_s", "active_power_w"];
const HF_HEADER: [&str; 4] = [
    "timestamp_unix_s",
    "active_power_w",
    "form_factor",
    "phase_shift_rad",
];

/// The five target appliances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Appliance {
    Kettle,
    Fridge,
    Washing,
    Microwave,
    Dishwasher,
}

impl Appliance {
    pub const ALL: [Appliance; 5] = [
        Appliance::Kettle,
        Appliance::Fridge,
        Appliance::Washing,
        Appliance::Microwave,
        Appliance::Dishwasher,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Appliance::Kettle => "kettle",
            Appliance::Fridge => "fridge",
            Appliance::Washing => "washing",
            Appliance::Microwave => "microwave",
            Appliance::Dishwasher => "dishwasher",
        }
    }

    /// Model input window length in minutes.
    pub fn window_minutes(self) -> u32 {
        match self {
            Appliance::Kettle => 13,
            Appliance::Fridge => 60,
            Appliance::Washing => 180,
            Appliance::Microwave => 10,
            Appliance::Dishwasher => 150,
        }
    }
}

impl fmt::Display for Appliance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Appliance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kettle" => Ok(Appliance::Kettle),
            "fridge" => Ok(Appliance::Fridge),
            "washing" | "washing_machine" | "washer" => Ok(Appliance::Washing),
            "microwave" => Ok(Appliance::Microwave),
            "dishwasher" | "dish_washer" => Ok(Appliance::Dishwasher),
            other => Err(Error::UnknownAppliance(other.to_string())),
        }
    }
}

/// Window length in samples for an appliance at the given sampling period.
pub fn window_length_for(appliance: &str, period_s: f64) -> Result<usize> {
    let appliance: Appliance = appliance.parse()?;
    window_length(appliance, period_s)
}

pub fn window_length(appliance: Appliance, period_s: f64) -> Result<usize> {
    if !(period_s > 0.0) || !period_s.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "period must be positive, got {period_s}"
        )));
    }
    let seconds = f64::from(appliance.window_minutes()) * 60.0;
    let samples = seconds / period_s;
    if (samples - samples.round()).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "period {period_s} s does not divide the {appliance} window of {seconds} s"
        )));
    }
    Ok(samples.round() as usize)
}

/// Univariate active-power series on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSeries {
    pub start_time: f64,
    pub period: f64,
    pub values: Vec<f64>,
}

impl PowerSeries {
    pub fn new(start_time: f64, period: f64, values: Vec<f64>) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "period must be positive, got {period}"
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sample {i} of power series")));
        }
        Ok(Self {
            start_time,
            period,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time_at(&self, index: usize) -> f64 {
        self.start_time + index as f64 * self.period
    }

    pub fn end_time(&self) -> f64 {
        self.time_at(self.values.len())
    }

    /// Index of the first sample at or after `t`, clamped to `len()`.
    pub fn index_at_or_after(&self, t: f64) -> usize {
        let idx = ((t - self.start_time) / self.period).ceil();
        if idx <= 0.0 {
            0
        } else {
            (idx as usize).min(self.values.len())
        }
    }

    /// Contiguous sub-series `[from, to)`, keeping grid alignment.
    pub fn sub_series(&self, from: usize, to: usize) -> Result<PowerSeries> {
        let len = to.saturating_sub(from);
        let values = slice_window(&self.values, from, len)?.to_vec();
        Ok(PowerSeries {
            start_time: self.time_at(from),
            period: self.period,
            values,
        })
    }

    pub fn window(&self, offset: usize, length: usize) -> Result<&[f64]> {
        slice_window(&self.values, offset, length)
    }
}

/// A named channel of a multivariate series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub name: String,
    pub values: Vec<f64>,
}

/// Power plus derived high-frequency descriptor channels on a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultivariateSeries {
    pub start_time: f64,
    pub period: f64,
    channels: Vec<Channel>,
}

impl MultivariateSeries {
    pub fn new(start_time: f64, period: f64, channels: Vec<Channel>) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "period must be positive, got {period}"
            )));
        }
        let Some(first) = channels.first() else {
            return Err(Error::Empty("multivariate series has no channels"));
        };
        let n = first.values.len();
        for (i, c) in channels.iter().enumerate() {
            if c.values.len() != n {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: c.values.len(),
                });
            }
            if channels[..i].iter().any(|o| o.name == c.name) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate channel name `{}`",
                    c.name
                )));
            }
            if let Some(j) = c.values.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("sample {j} of channel {}", c.name)));
            }
        }
        if !channels.iter().any(|c| c.name == POWER_CHANNEL) {
            return Err(Error::InvalidArgument(format!(
                "multivariate series must contain a `{POWER_CHANNEL}` channel"
            )));
        }
        Ok(Self {
            start_time,
            period,
            channels,
        })
    }

    /// Single-channel series wrapping active power.
    pub fn from_power(series: &PowerSeries) -> Self {
        Self {
            start_time: series.start_time,
            period: series.period,
            channels: vec![Channel {
                name: POWER_CHANNEL.to_string(),
                values: series.values.clone(),
            }],
        }
    }

    pub fn len(&self) -> usize {
        self.channels[0].values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    pub fn power(&self) -> &[f64] {
        self.channel(POWER_CHANNEL)
            .expect("power channel is always present")
    }

    pub fn power_series(&self) -> PowerSeries {
        PowerSeries {
            start_time: self.start_time,
            period: self.period,
            values: self.power().to_vec(),
        }
    }

    pub fn time_at(&self, index: usize) -> f64 {
        self.start_time + index as f64 * self.period
    }

    /// Keep only the named channels, in the given order.
    pub fn select(&self, names: &[&str]) -> Result<MultivariateSeries> {
        let mut channels = Vec::with_capacity(names.len());
        for name in names {
            let values = self
                .channel(name)
                .ok_or_else(|| Error::InvalidArgument(format!("missing channel `{name}`")))?;
            channels.push(Channel {
                name: name.to_string(),
                values: values.to_vec(),
            });
        }
        MultivariateSeries::new(self.start_time, self.period, channels)
    }

    pub fn sub_series(&self, from: usize, to: usize) -> Result<MultivariateSeries> {
        let len = to.saturating_sub(from);
        let channels = self
            .channels
            .iter()
            .map(|c| {
                Ok(Channel {
                    name: c.name.clone(),
                    values: slice_window(&c.values, from, len)?.to_vec(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MultivariateSeries {
            start_time: self.time_at(from),
            period: self.period,
            channels,
        })
    }

    /// Time-major interleaved window: element `t * C + c`.
    pub fn interleaved_window(&self, offset: usize, length: usize) -> Result<Vec<f64>> {
        let c = self.channels.len();
        let mut out = vec![0.0; length * c];
        for (ci, ch) in self.channels.iter().enumerate() {
            let w = slice_window(&ch.values, offset, length)?;
            for (t, v) in w.iter().enumerate() {
                out[t * c + ci] = *v;
            }
        }
        Ok(out)
    }
}

/// Contiguous view `[offset, offset + length)` of `values`.
pub fn slice_window(values: &[f64], offset: usize, length: usize) -> Result<&[f64]> {
    match offset.checked_add(length) {
        Some(end) if end <= values.len() => Ok(&values[offset..end]),
        _ => Err(Error::OutOfRange {
            offset,
            length,
            available: values.len(),
        }),
    }
}

/// Upsample with a first-order hold (linear interpolation) onto a finer grid.
///
/// Output length is `floor((n - 1) * src_period / target_period) + 1`; source
/// sample instants that land on the target grid are reproduced exactly.
pub fn resample_foh(series: &PowerSeries, target_period: f64) -> Result<PowerSeries> {
    if !(target_period > 0.0) || !target_period.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "target period must be positive, got {target_period}"
        )));
    }
    if series.values.is_empty() {
        return Err(Error::Empty("cannot resample an empty series"));
    }
    if series.values.len() < 2 {
        return Err(Error::InsufficientData(
            "first-order hold needs at least 2 samples".into(),
        ));
    }
    if target_period >= series.period {
        return Err(Error::InvalidArgument(format!(
            "target period {target_period} must be finer than source period {}",
            series.period
        )));
    }
    let n = series.values.len();
    let span = (n - 1) as f64 * series.period;
    let out_len = (span / target_period + 1e-9).floor() as usize + 1;
    let ratio = series.period / target_period;
    let integer_ratio = (ratio - ratio.round()).abs() < 1e-9;
    let r = ratio.round() as usize;

    let values = (0..out_len)
        .map(|k| {
            let (j, frac) = if integer_ratio {
                (k / r, (k % r) as f64 / r as f64)
            } else {
                let pos = k as f64 * target_period / series.period;
                let nearest = pos.round();
                if (pos - nearest).abs() < 1e-9 {
                    (nearest as usize, 0.0)
                } else {
                    (pos.floor() as usize, pos - pos.floor())
                }
            };
            if frac == 0.0 || j + 1 >= n {
                series.values[j.min(n - 1)]
            } else {
                let a = series.values[j];
                let b = series.values[j + 1];
                a + (b - a) * frac
            }
        })
        .collect();
    Ok(PowerSeries {
        start_time: series.start_time,
        period: target_period,
        values,
    })
}

/// Keep every `factor`-th sample.
pub fn decimate(series: &PowerSeries, factor: usize) -> Result<PowerSeries> {
    if factor == 0 {
        return Err(Error::InvalidArgument("decimation factor must be ≥ 1".into()));
    }
    Ok(PowerSeries {
        start_time: series.start_time,
        period: series.period * factor as f64,
        values: series.values.iter().step_by(factor).copied().collect(),
    })
}

/// Block-average down to a coarser integer-multiple period.
fn block_mean(values: &[f64], factor: usize) -> Vec<f64> {
    values
        .chunks_exact(factor)
        .map(|c| c.iter().sum::<f64>() / factor as f64)
        .collect()
}

/// Convert timestamped multi-channel rows into gap-free series on the
/// canonical grid.
///
/// Timestamps are snapped to the grid implied by `period` (inferred from the
/// median spacing when `None`). A single missing sample is filled by
/// first-order hold; longer gaps split the input. Each piece is then
/// resampled onto the canonical 6 s grid.
pub fn ingest_rows(
    timestamps: &[f64],
    columns: &[Vec<f64>],
    period: Option<f64>,
) -> Result<Vec<(f64, f64, Vec<Vec<f64>>)>> {
    if timestamps.is_empty() {
        return Err(Error::Empty("no rows to ingest"));
    }
    for c in columns {
        if c.len() != timestamps.len() {
            return Err(Error::LengthMismatch {
                left: timestamps.len(),
                right: c.len(),
            });
        }
    }
    for w in timestamps.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Parse {
                location: format!("timestamp {}", w[1]),
                message: "timestamps must be strictly increasing".into(),
            });
        }
    }
    let period = match period {
        Some(p) => p,
        None => infer_period(timestamps)?,
    };
    let t0 = timestamps[0];

    // Split into gap-free pieces on the source grid.
    let mut pieces: Vec<(usize, Vec<Vec<f64>>)> = Vec::new();
    let mut last_idx: i64 = -1;
    for (row, &t) in timestamps.iter().enumerate() {
        let idx = ((t - t0) / period).round() as i64;
        let gap = idx - last_idx;
        let start_new = pieces.is_empty() || gap > 2;
        if !pieces.is_empty() && gap <= 0 {
            return Err(Error::Parse {
                location: format!("row {row}"),
                message: "two rows snap to the same grid instant".into(),
            });
        }
        if start_new {
            pieces.push((idx as usize, vec![Vec::new(); columns.len()]));
        } else if gap == 2 {
            let (_, cols) = pieces.last_mut().unwrap();
            for (ci, col) in cols.iter_mut().enumerate() {
                let prev = *col.last().unwrap();
                col.push(0.5 * (prev + columns[ci][row]));
            }
        }
        let (_, cols) = pieces.last_mut().unwrap();
        for (ci, col) in cols.iter_mut().enumerate() {
            col.push(columns[ci][row]);
        }
        last_idx = idx;
    }

    let mut out = Vec::with_capacity(pieces.len());
    for (idx0, cols) in pieces {
        let start = t0 + idx0 as f64 * period;
        if (period - CANONICAL_PERIOD_S).abs() < 1e-9 {
            out.push((start, CANONICAL_PERIOD_S, cols));
        } else if period > CANONICAL_PERIOD_S {
            if cols[0].len() < 2 {
                continue;
            }
            let resampled = cols
                .into_iter()
                .map(|values| {
                    resample_foh(
                        &PowerSeries {
                            start_time: start,
                            period,
                            values,
                        },
                        CANONICAL_PERIOD_S,
                    )
                    .map(|s| s.values)
                })
                .collect::<Result<Vec<_>>>()?;
            out.push((start, CANONICAL_PERIOD_S, resampled));
        } else {
            let ratio = CANONICAL_PERIOD_S / period;
            if (ratio - ratio.round()).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "source period {period} s does not divide {CANONICAL_PERIOD_S} s"
                )));
            }
            let factor = ratio.round() as usize;
            let averaged: Vec<Vec<f64>> = cols.iter().map(|c| block_mean(c, factor)).collect();
            if averaged[0].is_empty() {
                continue;
            }
            out.push((start, CANONICAL_PERIOD_S, averaged));
        }
    }
    Ok(out)
}

fn infer_period(timestamps: &[f64]) -> Result<f64> {
    if timestamps.len() < 2 {
        return Ok(CANONICAL_PERIOD_S);
    }
    let mut diffs: Vec<f64> = timestamps.windows(2).map(|w| w[1] - w[0]).collect();
    diffs.sort_by(f64::total_cmp);
    let median = diffs[diffs.len() / 2];
    // Snap to microseconds so a written-then-read grid comes back identical.
    Ok((median * 1e6).round() / 1e6)
}

/// Read a low-frequency `timestamp_unix_s,active_power_w` CSV.
pub fn read_power_csv<R: Read>(reader: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let (ts, cols) = read_csv_columns(reader, &LF_HEADER)?;
    Ok((ts, cols.into_iter().next().unwrap()))
}

/// Read a multivariate `timestamp_unix_s,active_power_w,form_factor,phase_shift_rad` CSV.
pub fn read_multivariate_csv<R: Read>(reader: R) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    read_csv_columns(reader, &HF_HEADER)
}

/// Read either series format, deciding by header.
pub fn read_series_csv<R: Read>(reader: R, period: Option<f64>) -> Result<Vec<MultivariateSeries>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let names: &[&str] = if header == HF_HEADER {
        &HF_HEADER
    } else if header == LF_HEADER {
        &LF_HEADER
    } else {
        return Err(Error::Parse {
            location: "line 1".into(),
            message: format!("unrecognised header {header:?}"),
        });
    };
    let (ts, cols) = collect_rows(&mut rdr, names.len())?;
    let pieces = ingest_rows(&ts, &cols, period)?;
    pieces
        .into_iter()
        .map(|(start, period, cols)| {
            let channels = cols
                .into_iter()
                .zip(
                    [POWER_CHANNEL, FORM_FACTOR_CHANNEL, PHASE_SHIFT_CHANNEL]
                        .into_iter()
                        .take(names.len() - 1),
                )
                .map(|(values, name)| Channel {
                    name: name.to_string(),
                    values,
                })
                .collect();
            MultivariateSeries::new(start, period, channels)
        })
        .collect()
}

fn read_csv_columns<R: Read>(reader: R, expected: &[&str]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != expected {
        return Err(Error::Parse {
            location: "line 1".into(),
            message: format!("expected header {expected:?}, found {header:?}"),
        });
    }
    collect_rows(&mut rdr, expected.len())
}

fn collect_rows<R: Read>(
    rdr: &mut csv::Reader<R>,
    width: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut ts = Vec::new();
    let mut cols = vec![Vec::new(); width - 1];
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let line = row + 2;
        if record.len() != width {
            return Err(Error::Parse {
                location: format!("line {line}"),
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        for (i, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                location: format!("line {line}, column {}", i + 1),
                message: format!("not a number: `{field}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    location: format!("line {line}, column {}", i + 1),
                    message: "non-finite value".into(),
                });
            }
            if i == 0 {
                ts.push(v);
            } else {
                cols[i - 1].push(v);
            }
        }
    }
    Ok((ts, cols))
}

pub fn write_power_csv<W: Write>(writer: W, series: &PowerSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(LF_HEADER)?;
    for (i, v) in series.values.iter().enumerate() {
        w.write_record([series.time_at(i).to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Write a series in the format matching its channel count (1 or 3).
pub fn write_series_csv<W: Write>(writer: W, series: &MultivariateSeries) -> Result<()> {
    write_series_pieces_csv(writer, std::slice::from_ref(series))
}

/// Write gap-separated pieces of one recording under a single header. All
/// pieces must carry the same channels.
pub fn write_series_pieces_csv<W: Write>(writer: W, pieces: &[MultivariateSeries]) -> Result<()> {
    let first = pieces.first().ok_or(Error::Empty("series pieces"))?;
    let names: Vec<&str> = match first.channels().len() {
        1 => vec![POWER_CHANNEL],
        _ => vec![POWER_CHANNEL, FORM_FACTOR_CHANNEL, PHASE_SHIFT_CHANNEL],
    };
    let mut w = csv::Writer::from_writer(writer);
    if names.len() == 1 {
        w.write_record(LF_HEADER)?;
    } else {
        w.write_record(HF_HEADER)?;
    }
    for series in pieces {
        if series.channels().len() != first.channels().len() {
            return Err(Error::ShapeMismatch("pieces with different channel sets".into()));
        }
        let cols: Vec<&[f64]> = names
            .iter()
            .map(|n| {
                series
                    .channel(n)
                    .ok_or_else(|| Error::InvalidArgument(format!("missing channel `{n}`")))
            })
            .collect::<Result<_>>()?;
        for i in 0..series.len() {
            let mut rec = vec![series.time_at(i).to_string()];
            rec.extend(cols.iter().map(|c| c[i].to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn window_lengths_match_table() {
        assert_eq!(window_length_for("kettle", 6.0).unwrap(), 130);
        assert_eq!(window_length_for("washing", 6.0).unwrap(), 1800);
        assert_eq!(window_length_for("microwave", 6.0).unwrap(), 100);
        assert_eq!(window_length_for("fridge", 6.0).unwrap(), 600);
        assert_eq!(window_length_for("dishwasher", 6.0).unwrap(), 1500);
        assert!(matches!(
            window_length_for("toaster", 6.0),
            Err(Error::UnknownAppliance(_))
        ));
        assert!(window_length_for("kettle", 7.0).is_err());
    }

    #[test]
    fn foh_constant_and_linear() {
        let s = PowerSeries::new(0.0, 60.0, vec![100.0, 100.0]).unwrap();
        let r = resample_foh(&s, 6.0).unwrap();
        assert_eq!(r.len(), 11);
        assert!(r.values.iter().all(|&v| v == 100.0));

        let s = PowerSeries::new(0.0, 60.0, vec![0.0, 60.0]).unwrap();
        let r = resample_foh(&s, 6.0).unwrap();
        assert_eq!(r.values[1], 6.0);
        assert_eq!(r.values[10], 60.0);
    }

    #[test]
    fn foh_errors() {
        let s = PowerSeries::new(0.0, 60.0, vec![]).unwrap();
        assert!(matches!(resample_foh(&s, 6.0), Err(Error::Empty(_))));
        let s = PowerSeries::new(0.0, 60.0, vec![1.0, 2.0]).unwrap();
        assert!(resample_foh(&s, 0.0).is_err());
        assert!(resample_foh(&s, -1.0).is_err());
    }

    #[test]
    fn slice_window_bounds() {
        let v: Vec<f64> = (0..10).map(f64::from).collect();
        assert_eq!(slice_window(&v, 0, 10).unwrap(), &v[..]);
        assert_eq!(slice_window(&v, 3, 4).unwrap(), &[3.0, 4.0, 5.0, 6.0]);
        assert!(matches!(
            slice_window(&v, 8, 5),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn multivariate_invariants() {
        let ch = |n: &str, len: usize| Channel {
            name: n.into(),
            values: vec![0.0; len],
        };
        assert!(MultivariateSeries::new(0.0, 6.0, vec![ch(POWER_CHANNEL, 3), ch("x", 2)]).is_err());
        assert!(MultivariateSeries::new(0.0, 6.0, vec![ch(POWER_CHANNEL, 3), ch(POWER_CHANNEL, 3)]).is_err());
        assert!(MultivariateSeries::new(0.0, 6.0, vec![ch("x", 3)]).is_err());
        let m = MultivariateSeries::new(
            0.0,
            6.0,
            vec![ch(POWER_CHANNEL, 3), ch(FORM_FACTOR_CHANNEL, 3)],
        )
        .unwrap();
        assert_eq!(m.interleaved_window(1, 2).unwrap().len(), 4);
    }

    #[test]
    fn ingest_fills_single_gap_and_splits_long_gaps() {
        let ts = [0.0, 6.0, 18.0, 24.0, 60.0, 66.0];
        let p = vec![vec![1.0, 2.0, 4.0, 5.0, 7.0, 8.0]];
        let pieces = ingest_rows(&ts, &p, Some(6.0)).unwrap();
        assert_eq!(pieces.len(), 2);
        assert_eq!(pieces[0].2[0], vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(pieces[1].0, 60.0);
        assert_eq!(pieces[1].2[0], vec![7.0, 8.0]);
    }

    #[test]
    fn ingest_upsamples_minute_data() {
        let ts = [0.0, 60.0, 120.0];
        let p = vec![vec![0.0, 60.0, 0.0]];
        let pieces = ingest_rows(&ts, &p, None).unwrap();
        assert_eq!(pieces.len(), 1);
        assert_eq!(pieces[0].1, 6.0);
        assert_eq!(pieces[0].2[0].len(), 21);
        assert_eq!(pieces[0].2[0][10], 60.0);
        assert_eq!(pieces[0].2[0][15], 30.0);
    }

    #[test]
    fn low_frequency_csv_round_trips() {
        let s = PowerSeries::new(1_600_000_000.0, 6.0, vec![0.0, 12.5, 2999.75, 1e-3]).unwrap();
        let mut buf = Vec::new();
        write_power_csv(&mut buf, &s).unwrap();
        let back = read_series_csv(&buf[..], None).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].power_series(), s);
    }

    #[test]
    fn csv_reports_bad_line() {
        let text = "timestamp_unix_s,active_power_w\n0,1\n6,abc\n";
        let err = read_series_csv(text.as_bytes(), None).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    proptest! {
        #[test]
        fn foh_length_and_identity(
            values in proptest::collection::vec(0.0f64..5000.0, 2..40),
            ratio in 2usize..12,
        ) {
            let src = PowerSeries::new(10.0, 6.0 * ratio as f64, values.clone()).unwrap();
            let up = resample_foh(&src, 6.0).unwrap();
            prop_assert_eq!(up.len(), (values.len() - 1) * ratio + 1);
            let back = decimate(&up, ratio).unwrap();
            prop_assert_eq!(back.values, values);
        }

        #[test]
        fn partition_reconstructs(values in proptest::collection::vec(-1e3f64..1e3, 1..60), cuts in proptest::collection::vec(0usize..60, 0..5)) {
            let n = values.len();
            let mut bounds: Vec<usize> = cuts.into_iter().map(|c| c % (n + 1)).collect();
            bounds.push(0);
            bounds.push(n);
            bounds.sort_unstable();
            bounds.dedup();
            let mut rebuilt = Vec::new();
            for w in bounds.windows(2) {
                rebuilt.extend_from_slice(slice_window(&values, w[0], w[1] - w[0]).unwrap());
            }
            prop_assert_eq!(rebuilt, values);
        }
    }
}
