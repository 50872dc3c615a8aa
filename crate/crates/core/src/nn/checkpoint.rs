//! Binary weights container.
//!
//! Layout: 8-byte magic, `u32` format version, `u32` header length, JSON
//! header, little-endian `f32` parameters in layer order (weights then bias),
//! and a CRC32 of everything before it.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::arch::NetworkSpec;
use super::network::{LayerParams, Network};
use crate::dataset::NormStats;
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"NILMNET\0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    spec: NetworkSpec,
    /// `(weight elements, bias elements)` per layer.
    shapes: Vec<(usize, usize)>,
    norm_stats: NormStats,
    seed: u64,
}

/// A network with the normalization it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub network: Network<f32>,
    pub norm: NormStats,
    pub seed: u64,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            format_version: FORMAT_VERSION,
            spec: self.network.spec().clone(),
            shapes: self
                .network
                .params()
                .iter()
                .map(|p| (p.weight.len(), p.bias.len()))
                .collect(),
            norm_stats: self.norm.clone(),
            seed: self.seed,
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(20 + json.len() + 4 * self.network.param_count());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for p in self.network.params() {
            for v in p.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let corrupt = |m: String| Err(Error::Corrupt(m));
        if bytes.len() < MAGIC.len() + 12 {
            return corrupt(format!("checkpoint truncated at {} bytes", bytes.len()));
        }
        if &bytes[..8] != MAGIC {
            return corrupt("not a weights file (bad magic)".into());
        }
        let (body, crc) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(crc.try_into().unwrap());
        if crc32fast::hash(body) != stored {
            return corrupt("checksum mismatch (truncated or modified file)".into());
        }
        let version = u32::from_le_bytes(body[8..12].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::Version {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let hlen = u32::from_le_bytes(body[12..16].try_into().unwrap()) as usize;
        let Some(json) = body.get(16..16 + hlen) else {
            return corrupt(format!("header length {hlen} exceeds file"));
        };
        let header: Header = serde_json::from_slice(json)?;
        header.norm_stats.validate()?;
        let payload = &body[16 + hlen..];
        let expected: usize = header.shapes.iter().map(|(w, b)| w + b).sum();
        if payload.len() != 4 * expected {
            return corrupt(format!(
                "payload holds {} bytes, header declares {} parameters",
                payload.len(),
                expected
            ));
        }
        let mut floats = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()));
        let params: Vec<LayerParams<f32>> = header
            .shapes
            .iter()
            .map(|&(w, b)| LayerParams {
                weight: floats.by_ref().take(w).collect(),
                bias: floats.by_ref().take(b).collect(),
            })
            .collect();
        let network = Network::from_params(header.spec, params)?;
        Ok(Self {
            network,
            norm: header.norm_stats,
            seed: header.seed,
        })
    }

    /// Like [`Checkpoint::from_bytes`], but the stored architecture must equal
    /// `expected`.
    pub fn from_bytes_expecting(bytes: &[u8], expected: &NetworkSpec) -> Result<Self> {
        let ck = Self::from_bytes(bytes)?;
        let have = ck.network.spec();
        if have != expected {
            return Err(Error::ShapeMismatch(format!(
                "stored network is {} (W={}, C={}), expected {} (W={}, C={})",
                have.kind, have.window, have.channels, expected.kind, expected.window, expected.channels
            )));
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::arch::{build_architecture, build_architecture_with, ArchitectureDims, ArchitectureKind};
    use crate::nn::tensor::Tensor;

    fn sample(w: usize) -> Checkpoint {
        let spec = build_architecture_with(ArchitectureKind::Autoencoder, w, 1, &ArchitectureDims::tiny()).unwrap();
        Checkpoint {
            network: Network::new(spec, 17).unwrap(),
            norm: NormStats {
                sigma_input: vec![123.4],
                max_target: 2500.0,
            },
            seed: 17,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let ck = sample(20);
        let back = Checkpoint::from_bytes(&ck.to_bytes()).unwrap();
        assert_eq!(back, ck);
        let x = Tensor::<f32>::from_f64(vec![1, 20, 1], &(0..20).map(f64::from).collect::<Vec<_>>()).unwrap();
        assert_eq!(back.network.forward(&x).unwrap(), ck.network.forward(&x).unwrap());
    }

    #[test]
    fn full_size_round_trip() {
        let spec = build_architecture(ArchitectureKind::Autoencoder, 130, 1).unwrap();
        let ck = Checkpoint {
            network: Network::new(spec.clone(), 1).unwrap(),
            norm: NormStats {
                sigma_input: vec![1.0],
                max_target: 1.0,
            },
            seed: 1,
        };
        let back = Checkpoint::from_bytes_expecting(&ck.to_bytes(), &spec).unwrap();
        assert_eq!(back.network.params(), ck.network.params());
    }

    #[test]
    fn damaged_files_are_rejected() {
        let bytes = sample(20).to_bytes();
        for cut in [0, 10, bytes.len() / 2, bytes.len() - 1] {
            assert!(Checkpoint::from_bytes(&bytes[..cut]).is_err());
        }
        let mut flipped = bytes.clone();
        let k = flipped.len() - 20;
        flipped[k] ^= 0x40;
        assert!(matches!(Checkpoint::from_bytes(&flipped), Err(Error::Corrupt(_))));
    }

    #[test]
    fn version_and_shape_mismatch() {
        let mut bytes = sample(20).to_bytes();
        bytes[8] = 9;
        let n = bytes.len() - 4;
        let crc = crc32fast::hash(&bytes[..n]);
        bytes[n..].copy_from_slice(&crc.to_le_bytes());
        assert!(matches!(
            Checkpoint::from_bytes(&bytes),
            Err(Error::Version { found: 9, expected: 1 })
        ));
        let other = sample(24).network.spec().clone();
        assert!(matches!(
            Checkpoint::from_bytes_expecting(&sample(20).to_bytes(), &other),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
