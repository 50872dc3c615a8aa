use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Algorithm, ArchitectureKind, OptimizerConfig};

/// The seven trained models per appliance. The synthetic-data variants share
/// the architecture of their plain counterpart and differ only in the
/// training windows they see.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    Rectangles,
    RectanglesSyn,
    HfRectangles,
    Autoencoder,
    AutoencoderSyn,
    HfAutoencoder,
    BigAutoencoder,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 7] = [
        ModelVariant::Rectangles,
        ModelVariant::RectanglesSyn,
        ModelVariant::HfRectangles,
        ModelVariant::Autoencoder,
        ModelVariant::AutoencoderSyn,
        ModelVariant::HfAutoencoder,
        ModelVariant::BigAutoencoder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::Rectangles => "rectangles",
            ModelVariant::RectanglesSyn => "rectangles_syn",
            ModelVariant::HfRectangles => "hf_rectangles",
            ModelVariant::Autoencoder => "autoencoder",
            ModelVariant::AutoencoderSyn => "autoencoder_syn",
            ModelVariant::HfAutoencoder => "hf_autoencoder",
            ModelVariant::BigAutoencoder => "big_autoencoder",
        }
    }

    pub fn architecture(self) -> ArchitectureKind {
        match self {
            ModelVariant::Rectangles | ModelVariant::RectanglesSyn => ArchitectureKind::Rectangles,
            ModelVariant::HfRectangles => ArchitectureKind::HfRectangles,
            ModelVariant::Autoencoder | ModelVariant::AutoencoderSyn => ArchitectureKind::Autoencoder,
            ModelVariant::HfAutoencoder => ArchitectureKind::HfAutoencoder,
            ModelVariant::BigAutoencoder => ArchitectureKind::BigAutoencoder,
        }
    }

    pub fn uses_synthetic(self) -> bool {
        matches!(self, ModelVariant::RectanglesSyn | ModelVariant::AutoencoderSyn)
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        ModelVariant::ALL
            .into_iter()
            .find(|v| v.name() == key)
            .ok_or_else(|| {
                let names: Vec<&str> = ModelVariant::ALL.iter().map(|v| v.name()).collect();
                Error::InvalidArgument(format!("unknown model `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

pub const GRID_LEARNING_RATES: [f64; 3] = [0.0005, 0.001, 0.002];

/// Adam then Adamax, each at increasing learning rate.
pub fn default_grid() -> Vec<OptimizerConfig> {
    [Algorithm::Adam, Algorithm::Adamax]
        .into_iter()
        .flat_map(|a| GRID_LEARNING_RATES.map(|lr| OptimizerConfig::new(a, lr)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for v in ModelVariant::ALL {
            assert_eq!(v.name().parse::<ModelVariant>().unwrap(), v);
            assert_eq!(v.name(), serde_json::to_value(v).unwrap().as_str().unwrap());
        }
        assert_eq!("HF-Autoencoder".parse::<ModelVariant>().unwrap(), ModelVariant::HfAutoencoder);
        assert!("lstm".parse::<ModelVariant>().is_err());
        assert_eq!(ModelVariant::ALL.iter().filter(|v| v.uses_synthetic()).count(), 2);
        assert_eq!(
            ModelVariant::ALL.iter().filter(|v| v.architecture().is_autoencoder()).count(),
            4
        );
    }

    #[test]
    fn six_point_grid() {
        let g = default_grid();
        assert_eq!(g.len(), 6);
        assert_eq!(g.iter().filter(|c| c.algorithm == Algorithm::Adamax).count(), 3);
        for c in &g {
            assert!(GRID_LEARNING_RATES.contains(&c.learning_rate));
            c.validate().unwrap();
        }
    }
}
