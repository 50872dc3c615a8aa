//! Switch-on transient / steady-state segmentation using per-cycle RMS.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::signal::rms;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransientParams {
    /// Cycle RMS of the current (A) above which the appliance counts as on.
    pub on_floor: f64,
    /// Consecutive cycles that must agree for the signal to count as settled.
    pub settle_cycles: usize,
    /// Allowed relative deviation from the median of those cycles.
    pub tolerance: f64,
}

impl Default for TransientParams {
    fn default() -> Self {
        Self {
            on_floor: 0.05,
            settle_cycles: 5,
            tolerance: 0.10,
        }
    }
}

/// Sample ranges of the transient and steady parts of a record.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientSplit {
    pub transient: Range<usize>,
    pub steady: Range<usize>,
    pub samples_per_cycle: usize,
    pub onset_cycle: usize,
    /// `false` when the signal never settled; `steady` is then empty.
    pub settled: bool,
    pub cycle_rms: Vec<f64>,
}

pub fn cycle_rms(current: &[f64], samples_per_cycle: usize) -> Vec<f64> {
    current.chunks_exact(samples_per_cycle).map(rms).collect()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Split a record at the end of its switch-on transient.
///
/// The transient starts at the first cycle whose RMS exceeds `on_floor` and
/// ends at the first cycle `c` after which the next `settle_cycles` cycle-RMS
/// values all stay within `tolerance` of their median. Steady state begins at
/// cycle `c + 1`.
pub fn extract_transient(
    current: &[f64],
    f0: f64,
    fs: f64,
    params: &TransientParams,
) -> Result<TransientSplit> {
    let spc = (fs / f0).round() as usize;
    if spc == 0 {
        return Err(Error::InvalidArgument(format!("fs {fs} below mains {f0}")));
    }
    let cycles = current.len() / spc;
    if cycles < 2 {
        return Err(Error::InsufficientData(format!(
            "record spans {cycles} cycle(s); at least 2 required"
        )));
    }
    let crms = cycle_rms(current, spc);
    let onset = crms
        .iter()
        .position(|&r| r > params.on_floor)
        .ok_or(Error::NoOnset)?;

    let k = params.settle_cycles.max(1);
    let mut settle = None;
    let mut scratch = Vec::with_capacity(k);
    for c in onset..cycles {
        if c + k >= cycles {
            break;
        }
        scratch.clear();
        scratch.extend_from_slice(&crms[c + 1..=c + k]);
        let m = median(&mut scratch);
        let ok = crms[c + 1..=c + k]
            .iter()
            .all(|r| (r - m).abs() <= params.tolerance * m.abs());
        if ok {
            settle = Some(c);
            break;
        }
    }

    let start = onset * spc;
    Ok(match settle {
        Some(c) => TransientSplit {
            transient: start..(c + 1) * spc,
            steady: (c + 1) * spc..current.len(),
            samples_per_cycle: spc,
            onset_cycle: onset,
            settled: true,
            cycle_rms: crms,
        },
        None => TransientSplit {
            transient: start..current.len(),
            steady: current.len()..current.len(),
            samples_per_cycle: spc,
            onset_cycle: onset,
            settled: false,
            cycle_rms: crms,
        },
    })
}
