//! High-frequency waveform features.
//!
//! Two uses: the pair of descriptor channels (current form factor and
//! fundamental phase shift) that are added next to active power on the 6 s
//! grid, and the wider feature study (feature vectors, importance ranking,
//! random-forest and 1-NN classification) that motivated choosing them.

pub mod features;
pub mod forest;
pub mod io;
pub mod knn;
pub mod mutual_info;
pub mod signal;
pub mod study;
pub mod transient;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{
    Channel, MultivariateSeries, CANONICAL_PERIOD_S, FORM_FACTOR_CHANNEL, PHASE_SHIFT_CHANNEL,
    POWER_CHANNEL,
};

pub use features::{
    compute_feature_vector, feature_names, record_features, FeatureMode, FeatureVector,
    RecordFeatures, SegmentMode,
};
pub use forest::{forest_importance, forest_predict, train_forest, ForestModel, ForestParams};
pub use knn::knn_classify;
pub use mutual_info::{mutual_information, mutual_information_ranking};
pub use signal::{form_factor, fundamental_phase_shift};
pub use transient::{extract_transient, TransientParams, TransientSplit};

/// Simultaneously sampled voltage and current.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformRecord {
    pub fs: f64,
    pub f0: f64,
    pub voltage: Vec<f64>,
    pub current: Vec<f64>,
    pub label: Option<String>,
    #[serde(default)]
    pub start_unix_s: f64,
}

impl WaveformRecord {
    pub fn new(
        fs: f64,
        f0: f64,
        voltage: Vec<f64>,
        current: Vec<f64>,
        label: Option<String>,
    ) -> Result<Self> {
        if voltage.len() != current.len() {
            return Err(Error::LengthMismatch {
                left: voltage.len(),
                right: current.len(),
            });
        }
        if !(f0 > 0.0) || !(fs > 2.0 * f0) {
            return Err(Error::InvalidArgument(format!(
                "sampling rate {fs} Hz cannot resolve mains {f0} Hz"
            )));
        }
        let min_len = (2.0 * fs / f0).ceil() as usize;
        if voltage.len() < min_len {
            return Err(Error::InsufficientData(format!(
                "record has {} samples, at least 2 cycles ({min_len}) required",
                voltage.len()
            )));
        }
        Ok(Self {
            fs,
            f0,
            voltage,
            current,
            label,
            start_unix_s: 0.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HfChannelParams {
    pub period: f64,
    /// Slots whose current RMS is below this (A) get neutral descriptors.
    pub current_floor: f64,
}

impl Default for HfChannelParams {
    fn default() -> Self {
        Self {
            period: CANONICAL_PERIOD_S,
            current_floor: 0.01,
        }
    }
}

/// Multivariate series built from a long waveform, plus per-slot quality
/// flags (`true` = neutral descriptors substituted).
#[derive(Debug, Clone)]
pub struct HfChannels {
    pub series: MultivariateSeries,
    pub flagged: Vec<bool>,
}

/// Reduce a long waveform to one (active power, form factor, phase shift)
/// row per `period`-second slot.
pub fn hf_channel_series(rec: &WaveformRecord, params: &HfChannelParams) -> Result<HfChannels> {
    let slot = rec.fs * params.period;
    if (slot - slot.round()).abs() > 1e-6 || slot < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "fs·period = {slot} is not an integer sample count"
        )));
    }
    let slot = slot.round() as usize;
    let slots = rec.current.len() / slot;
    if slots == 0 {
        return Err(Error::InsufficientData(format!(
            "record of {} samples is shorter than one {} s slot",
            rec.current.len(),
            params.period
        )));
    }
    let mut power = Vec::with_capacity(slots);
    let mut ff = Vec::with_capacity(slots);
    let mut phase = Vec::with_capacity(slots);
    let mut flagged = Vec::with_capacity(slots);
    for s in 0..slots {
        let r = s * slot..(s + 1) * slot;
        let (i, v) = (&rec.current[r.clone()], &rec.voltage[r]);
        let p = i.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / slot as f64;
        power.push(p);
        let descriptors = if signal::rms(i) < params.current_floor {
            None
        } else {
            match (form_factor(i), fundamental_phase_shift(i, v, rec.f0, rec.fs)) {
                (Ok(f), Ok(ph)) => Some((f, ph)),
                _ => None,
            }
        };
        let (f, ph) = descriptors.unwrap_or((1.0, 0.0));
        ff.push(f);
        phase.push(ph);
        flagged.push(descriptors.is_none());
    }
    let series = MultivariateSeries::new(
        rec.start_unix_s,
        params.period,
        vec![
            Channel {
                name: POWER_CHANNEL.into(),
                values: power,
            },
            Channel {
                name: FORM_FACTOR_CHANNEL.into(),
                values: ff,
            },
            Channel {
                name: PHASE_SHIFT_CHANNEL.into(),
                values: phase,
            },
        ],
    )?;
    Ok(HfChannels { series, flagged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn resistive(seconds: f64, i_amp: f64) -> WaveformRecord {
        let fs = 14_000.0;
        let n = (seconds * fs) as usize;
        let v: Vec<f64> = (0..n)
            .map(|k| 230.0 * 2f64.sqrt() * (2.0 * PI * 50.0 * k as f64 / fs).sin())
            .collect();
        let i: Vec<f64> = (0..n)
            .map(|k| i_amp * 2f64.sqrt() * (2.0 * PI * 50.0 * k as f64 / fs).sin())
            .collect();
        WaveformRecord::new(fs, 50.0, v, i, None).unwrap()
    }

    #[test]
    fn resistive_slot() {
        let rec = resistive(6.0, 10.0);
        let hf = hf_channel_series(&rec, &HfChannelParams::default()).unwrap();
        let s = &hf.series;
        assert_eq!(s.len(), 1);
        assert!((s.power()[0] - 2300.0).abs() < 1e-6);
        assert!((s.channel(FORM_FACTOR_CHANNEL).unwrap()[0] - 1.1107).abs() < 1e-3);
        assert!(s.channel(PHASE_SHIFT_CHANNEL).unwrap()[0].abs() < 1e-6);
        assert!(!hf.flagged[0]);
    }

    #[test]
    fn zero_current_slot_is_flagged() {
        let rec = resistive(6.0, 0.0);
        let hf = hf_channel_series(&rec, &HfChannelParams::default()).unwrap();
        assert_eq!(hf.series.power()[0], 0.0);
        assert_eq!(hf.series.channel(FORM_FACTOR_CHANNEL).unwrap()[0], 1.0);
        assert_eq!(hf.series.channel(PHASE_SHIFT_CHANNEL).unwrap()[0], 0.0);
        assert!(hf.flagged[0]);
    }

    #[test]
    fn slots_are_local() {
        let a = resistive(6.0, 10.0);
        let b = resistive(6.0, 0.0);
        let mut joined = a.clone();
        joined.voltage.extend_from_slice(&b.voltage);
        joined.current.extend_from_slice(&b.current);
        let p = HfChannelParams::default();
        let hj = hf_channel_series(&joined, &p).unwrap();
        let ha = hf_channel_series(&a, &p).unwrap();
        let hb = hf_channel_series(&b, &p).unwrap();
        assert_eq!(hj.series.len(), 2);
        for name in [POWER_CHANNEL, FORM_FACTOR_CHANNEL, PHASE_SHIFT_CHANNEL] {
            let j = hj.series.channel(name).unwrap();
            assert!((j[0] - ha.series.channel(name).unwrap()[0]).abs() < 1e-9);
            assert!((j[1] - hb.series.channel(name).unwrap()[0]).abs() < 1e-9);
        }
        assert_eq!(hj.flagged, vec![false, true]);
    }

    #[test]
    fn short_record_errors() {
        let rec = resistive(1.0, 10.0);
        assert!(hf_channel_series(&rec, &HfChannelParams::default()).is_err());
    }
}
