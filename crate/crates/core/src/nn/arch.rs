//! Layer definitions and the five network architectures.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchitectureKind {
    Autoencoder,
    Rectangles,
    HfAutoencoder,
    HfRectangles,
    BigAutoencoder,
}

impl ArchitectureKind {
    pub const ALL: [ArchitectureKind; 5] = [
        ArchitectureKind::Autoencoder,
        ArchitectureKind::Rectangles,
        ArchitectureKind::HfAutoencoder,
        ArchitectureKind::HfRectangles,
        ArchitectureKind::BigAutoencoder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ArchitectureKind::Autoencoder => "autoencoder",
            ArchitectureKind::Rectangles => "rectangles",
            ArchitectureKind::HfAutoencoder => "hf_autoencoder",
            ArchitectureKind::HfRectangles => "hf_rectangles",
            ArchitectureKind::BigAutoencoder => "big_autoencoder",
        }
    }

    /// Autoencoders emit a power series; rectangles emit (start, end, power).
    pub fn is_autoencoder(self) -> bool {
        !matches!(self, ArchitectureKind::Rectangles | ArchitectureKind::HfRectangles)
    }

    pub fn input_channels(self) -> usize {
        match self {
            ArchitectureKind::HfAutoencoder | ArchitectureKind::HfRectangles => 3,
            _ => 1,
        }
    }
}

impl fmt::Display for ArchitectureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ArchitectureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ArchitectureKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unsupported architecture `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Linear,
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    Valid,
    /// Output length equals input length; even kernels pad one more on the
    /// right than on the left.
    Same,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv1d {
        filters: usize,
        kernel: usize,
        padding: Padding,
        activation: Activation,
    },
    Dense {
        units: usize,
        activation: Activation,
    },
    Flatten,
    Reshape {
        len: usize,
        channels: usize,
    },
    ZeroPad1d {
        left: usize,
        right: usize,
    },
}

/// Per-sample activation shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Seq { len: usize, channels: usize },
    Flat(usize),
}

impl Shape {
    pub fn size(self) -> usize {
        match self {
            Shape::Seq { len, channels } => len * channels,
            Shape::Flat(n) => n,
        }
    }

    pub fn dims(self) -> Vec<usize> {
        match self {
            Shape::Seq { len, channels } => vec![len, channels],
            Shape::Flat(n) => vec![n],
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Seq { len, channels } => write!(f, "({len}, {channels})"),
            Shape::Flat(n) => write!(f, "({n})"),
        }
    }
}

/// Left/right padding of a 'same' convolution.
pub fn same_padding(kernel: usize) -> (usize, usize) {
    let total = kernel - 1;
    (total / 2, total - total / 2)
}

impl LayerSpec {
    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        let mismatch = |what: &str| Err(Error::ShapeMismatch(format!("{what} cannot take input {input}")));
        match *self {
            LayerSpec::Conv1d {
                filters,
                kernel,
                padding,
                ..
            } => {
                let Shape::Seq { len, .. } = input else {
                    return mismatch("conv1d");
                };
                if filters == 0 || kernel == 0 {
                    return mismatch("empty conv1d");
                }
                let out = match padding {
                    Padding::Valid if len >= kernel => len - kernel + 1,
                    Padding::Valid => return mismatch("conv1d (input shorter than kernel)"),
                    Padding::Same => len,
                };
                Ok(Shape::Seq {
                    len: out,
                    channels: filters,
                })
            }
            LayerSpec::Dense { units, .. } => match input {
                Shape::Flat(_) if units > 0 => Ok(Shape::Flat(units)),
                _ => mismatch("dense"),
            },
            LayerSpec::Flatten => Ok(Shape::Flat(input.size())),
            LayerSpec::Reshape { len, channels } => {
                if len * channels == input.size() {
                    Ok(Shape::Seq { len, channels })
                } else {
                    mismatch(&format!("reshape to ({len}, {channels})"))
                }
            }
            LayerSpec::ZeroPad1d { left, right } => match input {
                Shape::Seq { len, channels } => Ok(Shape::Seq {
                    len: len + left + right,
                    channels,
                }),
                Shape::Flat(_) => mismatch("zeropad1d"),
            },
        }
    }

    /// Weight and bias element counts for a given input shape.
    pub fn param_shapes(&self, input: Shape) -> Option<(Vec<usize>, usize)> {
        match (*self, input) {
            (LayerSpec::Conv1d { filters, kernel, .. }, Shape::Seq { channels, .. }) => {
                Some((vec![kernel, channels, filters], filters))
            }
            (LayerSpec::Dense { units, .. }, Shape::Flat(n)) => Some((vec![n, units], units)),
            _ => None,
        }
    }

    pub fn activation(&self) -> Activation {
        match *self {
            LayerSpec::Conv1d { activation, .. } | LayerSpec::Dense { activation, .. } => activation,
            _ => Activation::Linear,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Conv1d { .. } => "conv1d",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Reshape { .. } => "reshape",
            LayerSpec::ZeroPad1d { .. } => "zeropad1d",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub kind: ArchitectureKind,
    pub window: usize,
    pub channels: usize,
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    pub fn input_shape(&self) -> Shape {
        Shape::Seq {
            len: self.window,
            channels: self.channels,
        }
    }

    /// Input shape followed by every layer's output shape.
    pub fn shapes(&self) -> Result<Vec<Shape>> {
        let mut out = vec![self.input_shape()];
        for layer in &self.layers {
            let next = layer.output_shape(*out.last().unwrap())?;
            out.push(next);
        }
        Ok(out)
    }

    pub fn output_shape(&self) -> Result<Shape> {
        Ok(*self.shapes()?.last().unwrap())
    }
}

/// Total trainable parameters.
pub fn count_params(spec: &NetworkSpec) -> Result<usize> {
    let shapes = spec.shapes()?;
    Ok(spec
        .layers
        .iter()
        .zip(&shapes)
        .filter_map(|(l, &s)| l.param_shapes(s))
        .map(|(w, b)| w.iter().product::<usize>() + b)
        .sum())
}

/// Widths that are fixed regardless of the window length. Only shrunk for
/// finite-difference checks, where the full dense stack is too large.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchitectureDims {
    pub kernel: usize,
    pub ae_filters: usize,
    pub ae_code: usize,
    pub rect_filters: usize,
    pub rect_dense: Vec<usize>,
}

impl Default for ArchitectureDims {
    fn default() -> Self {
        Self {
            kernel: 4,
            ae_filters: 8,
            ae_code: 128,
            rect_filters: 16,
            rect_dense: vec![4096, 3072, 2048, 512],
        }
    }
}

impl ArchitectureDims {
    /// Small widths for gradient checks.
    pub fn tiny() -> Self {
        Self {
            kernel: 4,
            ae_filters: 3,
            ae_code: 5,
            rect_filters: 3,
            rect_dense: vec![12, 10, 8, 6],
        }
    }
}

pub fn build_architecture(kind: ArchitectureKind, window: usize, channels: usize) -> Result<NetworkSpec> {
    build_architecture_with(kind, window, channels, &ArchitectureDims::default())
}

pub fn build_architecture_with(
    kind: ArchitectureKind,
    window: usize,
    channels: usize,
    dims: &ArchitectureDims,
) -> Result<NetworkSpec> {
    if window < 8 {
        return Err(Error::InvalidArgument(format!("window {window} < 8")));
    }
    if channels != kind.input_channels() {
        return Err(Error::InvalidArgument(format!(
            "{kind} takes {} input channel(s), got {channels}",
            kind.input_channels()
        )));
    }
    let k = dims.kernel;
    let conv = |filters, padding, activation| LayerSpec::Conv1d {
        filters,
        kernel: k,
        padding,
        activation,
    };
    let dense = |units| LayerSpec::Dense {
        units,
        activation: Activation::Relu,
    };
    let code_len = window - (k - 1);
    let f = dims.ae_filters;
    let decode_tail = [
        LayerSpec::Reshape {
            len: code_len,
            channels: f,
        },
        LayerSpec::ZeroPad1d {
            left: same_padding(k).0,
            right: same_padding(k).1,
        },
        conv(1, Padding::Same, Activation::Linear),
    ];
    let mut layers = Vec::new();
    match kind {
        ArchitectureKind::Autoencoder | ArchitectureKind::HfAutoencoder => {
            layers.push(conv(f, Padding::Valid, Activation::Relu));
            layers.push(LayerSpec::Flatten);
            layers.push(dense(code_len * f));
            layers.push(dense(dims.ae_code));
            layers.push(dense(code_len * f));
            layers.extend(decode_tail);
        }
        ArchitectureKind::BigAutoencoder => {
            let code = ((window as f64) / 10.0).round() as usize;
            layers.push(conv(f, Padding::Valid, Activation::Relu));
            layers.push(conv(f, Padding::Valid, Activation::Relu));
            layers.push(LayerSpec::Flatten);
            layers.push(dense(code_len * f));
            layers.push(dense(code_len * 2));
            layers.push(dense(code.max(1)));
            layers.push(dense(code_len * 2));
            layers.push(dense(code_len * f));
            layers.extend(decode_tail);
        }
        ArchitectureKind::Rectangles | ArchitectureKind::HfRectangles => {
            layers.push(conv(dims.rect_filters, Padding::Valid, Activation::Relu));
            layers.push(conv(dims.rect_filters, Padding::Valid, Activation::Relu));
            layers.push(LayerSpec::Flatten);
            for &u in &dims.rect_dense {
                layers.push(dense(u));
            }
            layers.push(LayerSpec::Dense {
                units: 3,
                activation: Activation::Linear,
            });
        }
    }
    let spec = NetworkSpec {
        kind,
        window,
        channels,
        layers,
    };
    spec.shapes()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(kind: ArchitectureKind) -> usize {
        count_params(&build_architecture(kind, 130, kind.input_channels()).unwrap()).unwrap()
    }

    #[test]
    fn kettle_parameter_totals() {
        assert_eq!(params(ArchitectureKind::Autoencoder), 1_294_585);
        assert_eq!(params(ArchitectureKind::Rectangles), 28_061_795);
        assert_eq!(params(ArchitectureKind::HfAutoencoder), 1_294_649);
        assert_eq!(params(ArchitectureKind::HfRectangles), 28_061_923);
        assert_eq!(params(ArchitectureKind::BigAutoencoder), 1_533_494);
    }

    fn layer_params(spec: &NetworkSpec) -> Vec<usize> {
        let shapes = spec.shapes().unwrap();
        spec.layers
            .iter()
            .zip(&shapes)
            .map(|(l, &s)| l.param_shapes(s).map_or(0, |(w, b)| w.iter().product::<usize>() + b))
            .collect()
    }

    #[test]
    fn autoencoder_shape_chain() {
        let spec = build_architecture(ArchitectureKind::Autoencoder, 130, 1).unwrap();
        let s = spec.shapes().unwrap();
        let seq = |len, channels| Shape::Seq { len, channels };
        assert_eq!(
            s,
            vec![
                seq(130, 1),
                seq(127, 8),
                Shape::Flat(1016),
                Shape::Flat(1016),
                Shape::Flat(128),
                Shape::Flat(1016),
                seq(127, 8),
                seq(130, 8),
                seq(130, 1)
            ]
        );
        assert_eq!(layer_params(&spec), vec![40, 0, 1_033_272, 130_176, 131_064, 0, 0, 33]);
    }

    #[test]
    fn rectangles_and_big_layer_tables() {
        let rect = build_architecture(ArchitectureKind::Rectangles, 130, 1).unwrap();
        assert_eq!(rect.shapes().unwrap()[3], Shape::Flat(1984));
        assert_eq!(
            layer_params(&rect),
            vec![80, 1040, 0, 8_130_560, 12_585_984, 6_293_504, 1_049_088, 1539]
        );
        assert_eq!(rect.output_shape().unwrap(), Shape::Flat(3));
        let hf = build_architecture(ArchitectureKind::HfRectangles, 130, 3).unwrap();
        assert_eq!(layer_params(&hf)[0], 208);
        let hfae = build_architecture(ArchitectureKind::HfAutoencoder, 130, 3).unwrap();
        assert_eq!(layer_params(&hfae)[0], 104);
        let big = build_architecture(ArchitectureKind::BigAutoencoder, 130, 1).unwrap();
        assert_eq!(
            layer_params(&big),
            vec![40, 264, 0, 1_008_888, 258_318, 3315, 3556, 259_080, 0, 0, 33]
        );
        assert_eq!(big.shapes().unwrap()[3], Shape::Flat(992));
    }

    #[test]
    fn output_lengths_follow_window() {
        for w in [8, 16, 100, 131, 600] {
            for kind in ArchitectureKind::ALL {
                let spec = build_architecture(kind, w, kind.input_channels()).unwrap();
                let out = spec.output_shape().unwrap();
                if kind.is_autoencoder() {
                    assert_eq!(out, Shape::Seq { len: w, channels: 1 });
                } else {
                    assert_eq!(out, Shape::Flat(3));
                }
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(build_architecture(ArchitectureKind::Autoencoder, 7, 1).is_err());
        assert!(build_architecture(ArchitectureKind::Autoencoder, 130, 3).is_err());
        assert!("convnet".parse::<ArchitectureKind>().is_err());
        assert_eq!("hf_rectangles".parse::<ArchitectureKind>().unwrap(), ArchitectureKind::HfRectangles);
    }
}
