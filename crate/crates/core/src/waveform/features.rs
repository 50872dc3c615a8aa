//! Fixed feature vector computed over a transient or steady segment.

use std::sync::OnceLock;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::signal::{
    form_factor, fundamental_phasors, goertzel, rms, whole_cycle_len, wrap_angle,
    DEGENERATE_FLOOR,
};
use super::transient::{cycle_rms, extract_transient, TransientParams};
use super::WaveformRecord;
use crate::error::{Error, Result};

pub const VI_GRID: usize = 16;
const ODD_HARMONICS: [u32; 10] = [3, 5, 7, 9, 11, 13, 15, 17, 19, 21];
const ROLLOFF_FRACTION: f64 = 0.85;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentMode {
    Transient,
    Steady,
}

/// How a segment's features are computed. The transient mode needs the
/// steady-state cycle RMS as its inrush reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureMode {
    Steady,
    Transient { steady_cycle_rms: f64 },
}

impl FeatureMode {
    pub fn tag(self) -> SegmentMode {
        match self {
            FeatureMode::Steady => SegmentMode::Steady,
            FeatureMode::Transient { .. } => SegmentMode::Transient,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub mode: SegmentMode,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        feature_names(self.mode)
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }

    /// Flattened VI image pixels (row-major, current on rows).
    pub fn vi_pixels(&self) -> &[f64] {
        let n = scalar_names(self.mode).len();
        &self.values[n..n + VI_GRID * VI_GRID]
    }
}

fn scalar_names(mode: SegmentMode) -> Vec<String> {
    let mut names: Vec<String> = [
        "i_rms",
        "v_rms",
        "active_power",
        "apparent_power",
        "reactive_power",
        "power_factor",
        "thd_current",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    names.extend(ODD_HARMONICS.iter().map(|h| format!("harmonic_{h}")));
    names.extend(
        [
            "i_mean",
            "i_std",
            "i_skewness",
            "i_kurtosis",
            "crest_factor",
            "form_factor",
            "phase_shift",
            "spectral_centroid",
            "spectral_rolloff",
            "spectral_flatness",
            "zero_crossing_rate",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    if mode == SegmentMode::Transient {
        names.push("inrush_ratio".into());
        names.push("transient_duration".into());
    }
    names
}

/// Ordered feature names for a mode: scalar features followed by VI pixels.
pub fn feature_names(mode: SegmentMode) -> &'static [String] {
    static TRANSIENT: OnceLock<Vec<String>> = OnceLock::new();
    static STEADY: OnceLock<Vec<String>> = OnceLock::new();
    let build = |mode| {
        let mut names = scalar_names(mode);
        for r in 0..VI_GRID {
            for c in 0..VI_GRID {
                names.push(format!("vi_{r}_{c}"));
            }
        }
        names
    };
    match mode {
        SegmentMode::Transient => TRANSIENT.get_or_init(|| build(SegmentMode::Transient)),
        SegmentMode::Steady => STEADY.get_or_init(|| build(SegmentMode::Steady)),
    }
}

struct Moments {
    mean: f64,
    std: f64,
    skewness: f64,
    kurtosis: f64,
}

fn moments(x: &[f64]) -> Moments {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let std = m2.sqrt();
    if std <= DEGENERATE_FLOOR {
        return Moments {
            mean,
            std,
            skewness: 0.0,
            kurtosis: 0.0,
        };
    }
    Moments {
        mean,
        std,
        skewness: m3 / (std * std * std),
        kurtosis: m4 / (m2 * m2),
    }
}

struct Spectral {
    centroid: f64,
    rolloff: f64,
    flatness: f64,
}

fn spectral(x: &[f64], fs: f64) -> Spectral {
    let n = x.len();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let bins = 1..=n / 2;
    let mags: Vec<f64> = bins.clone().map(|k| buf[k].norm()).collect();
    let freqs: Vec<f64> = bins.map(|k| k as f64 * fs / n as f64).collect();
    let mag_sum: f64 = mags.iter().sum();
    if mags.is_empty() || mag_sum <= DEGENERATE_FLOOR {
        return Spectral {
            centroid: 0.0,
            rolloff: 0.0,
            flatness: 0.0,
        };
    }
    let centroid = mags.iter().zip(&freqs).map(|(m, f)| m * f).sum::<f64>() / mag_sum;
    let power: Vec<f64> = mags.iter().map(|m| m * m).collect();
    let total: f64 = power.iter().sum();
    let mut acc = 0.0;
    let mut rolloff = *freqs.last().unwrap();
    for (p, f) in power.iter().zip(&freqs) {
        acc += p;
        if acc >= ROLLOFF_FRACTION * total {
            rolloff = *f;
            break;
        }
    }
    let eps = 1e-12;
    let log_mean = power.iter().map(|p| (p + eps).ln()).sum::<f64>() / power.len() as f64;
    let flatness = log_mean.exp() / (total / power.len() as f64 + eps);
    Spectral {
        centroid,
        rolloff,
        flatness,
    }
}

fn zero_crossing_rate(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let crossings = x
        .windows(2)
        .filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0))
        .count();
    crossings as f64 / (x.len() - 1) as f64
}

/// Binary VI-trajectory image of the cycle-averaged (v, i) loop.
pub fn vi_image(i: &[f64], v: &[f64], f0: f64, fs: f64) -> Vec<f64> {
    let spc = ((fs / f0).round() as usize).max(1);
    let cycles = (i.len() / spc).max(1);
    let spc = spc.min(i.len());
    let mut avg_i = vec![0.0; spc];
    let mut avg_v = vec![0.0; spc];
    for c in 0..cycles {
        for k in 0..spc {
            let idx = c * spc + k;
            if idx < i.len() {
                avg_i[k] += i[idx];
                avg_v[k] += v[idx];
            }
        }
    }
    let cell = |x: f64, lo: f64, hi: f64| -> usize {
        if hi - lo <= DEGENERATE_FLOOR {
            VI_GRID / 2
        } else {
            (((x - lo) / (hi - lo)) * VI_GRID as f64).floor().min((VI_GRID - 1) as f64) as usize
        }
    };
    let (ilo, ihi) = min_max(&avg_i);
    let (vlo, vhi) = min_max(&avg_v);
    let mut img = vec![0.0; VI_GRID * VI_GRID];
    for k in 0..spc {
        let row = VI_GRID - 1 - cell(avg_i[k], ilo, ihi);
        let col = cell(avg_v[k], vlo, vhi);
        img[row * VI_GRID + col] = 1.0;
    }
    img
}

fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Compute the pinned feature list over one segment.
pub fn compute_feature_vector(
    i: &[f64],
    v: &[f64],
    f0: f64,
    fs: f64,
    mode: FeatureMode,
) -> Result<FeatureVector> {
    if i.len() != v.len() {
        return Err(Error::LengthMismatch {
            left: i.len(),
            right: v.len(),
        });
    }
    let n = whole_cycle_len(i.len(), f0, fs)?;
    let (i, v) = (&i[..n], &v[..n]);

    let i_rms = rms(i);
    let v_rms = rms(v);
    let p = i.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let s = i_rms * v_rms;
    let (ip, vp) = fundamental_phasors(i, v, f0, fs)?;
    let to_rms = 2.0_f64.sqrt() / n as f64;
    let i1 = ip.norm() * to_rms;
    let v1 = vp.norm() * to_rms;
    let phase = wrap_angle(ip.arg() - vp.arg());
    let q = v1 * i1 * (-phase).sin();
    let pf = if s > DEGENERATE_FLOOR { (p.abs() / s).min(1.0) } else { 0.0 };
    let thd = (i_rms * i_rms - i1 * i1).max(0.0).sqrt() / i1;

    let mut values = vec![i_rms, v_rms, p, s, q, pf, thd];
    let nyquist = fs / 2.0;
    for h in ODD_HARMONICS {
        let f = f64::from(h) * f0;
        let mag = if f < nyquist {
            goertzel(i, f, fs).norm() * to_rms / i1
        } else {
            0.0
        };
        values.push(mag);
    }
    let m = moments(i);
    let peak = i.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let spec = spectral(i, fs);
    values.extend([
        m.mean,
        m.std,
        m.skewness,
        m.kurtosis,
        peak / i_rms,
        form_factor(i)?,
        phase,
        spec.centroid,
        spec.rolloff,
        spec.flatness,
        zero_crossing_rate(i),
    ]);
    if let FeatureMode::Transient { steady_cycle_rms } = mode {
        let spc = ((fs / f0).round() as usize).max(1);
        let peak_cycle = cycle_rms(i, spc).into_iter().fold(0.0f64, f64::max);
        let inrush = if steady_cycle_rms > DEGENERATE_FLOOR {
            peak_cycle / steady_cycle_rms
        } else {
            1.0
        };
        values.push(inrush);
        values.push(n as f64 / fs);
    }
    values.extend(vi_image(i, v, f0, fs));

    if let Some(k) = values.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!(
            "feature `{}`",
            feature_names(mode.tag())[k]
        )));
    }
    Ok(FeatureVector {
        mode: mode.tag(),
        values,
    })
}

/// Transient and steady feature vectors of a whole switch-on record.
#[derive(Debug, Clone)]
pub struct RecordFeatures {
    pub transient: FeatureVector,
    pub steady: FeatureVector,
    /// `false` when the record never settled; the steady features then come
    /// from its last `settle_cycles` cycles.
    pub settled: bool,
}

pub fn record_features(rec: &WaveformRecord, params: &TransientParams) -> Result<RecordFeatures> {
    let split = extract_transient(&rec.current, rec.f0, rec.fs, params)?;
    let spc = split.samples_per_cycle;
    let steady = if split.settled && split.steady.len() >= spc {
        split.steady.clone()
    } else {
        let tail = (params.settle_cycles.max(1) * spc).min(split.transient.len());
        let end = split.transient.end;
        (end - tail)..end
    };
    let steady_rms = {
        let mut c = cycle_rms(&rec.current[steady.clone()], spc);
        c.sort_by(f64::total_cmp);
        c.get(c.len() / 2).copied().unwrap_or(0.0)
    };
    let transient = compute_feature_vector(
        &rec.current[split.transient.clone()],
        &rec.voltage[split.transient.clone()],
        rec.f0,
        rec.fs,
        FeatureMode::Transient {
            steady_cycle_rms: steady_rms,
        },
    )?;
    let steady_fv = compute_feature_vector(
        &rec.current[steady.clone()],
        &rec.voltage[steady],
        rec.f0,
        rec.fs,
        FeatureMode::Steady,
    )?;
    Ok(RecordFeatures {
        transient,
        steady: steady_fv,
        settled: split.settled,
    })
}
