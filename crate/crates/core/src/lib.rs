//! Non-intrusive load monitoring pipeline.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod nn;
pub mod seed;
pub mod series;
pub mod training;
pub mod waveform;

pub use error::{Error, Result};
