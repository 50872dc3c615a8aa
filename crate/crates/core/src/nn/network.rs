//! Parameters, forward pass and backpropagation.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::arch::{same_padding, Activation, LayerSpec, NetworkSpec, Padding, Shape};
use super::scalar::{matmul, Scalar};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::seed::derived_rng;

/// Weight and bias of one layer; both empty for parameter-free layers.
///
/// Conv weights are laid out `[kernel, in_channels, filters]`, dense weights
/// `[inputs, units]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LayerParams<T> {
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> LayerParams<T> {
    fn zeros_like(&self) -> Self {
        Self {
            weight: vec![T::zero(); self.weight.len()],
            bias: vec![T::zero(); self.bias.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.weight.iter().chain(&self.bias)
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.weight.iter_mut().chain(self.bias.iter_mut())
    }
}

/// Loss gradients, aligned with [`Network::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<LayerParams<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(|l| l.iter().all(|v| v.is_finite()))
    }

    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.iter())
            .fold(0.0, |m, v| m.max(v.as_f64().abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    spec: NetworkSpec,
    shapes: Vec<Shape>,
    params: Vec<LayerParams<T>>,
}

enum Saved<T> {
    /// im2col matrix `(batch·out_len) × (kernel·in_channels)`.
    Cols(Vec<T>),
    Input(Vec<T>),
    Nothing,
}

/// Intermediate values kept for backpropagation.
pub struct Trace<T> {
    batch: usize,
    saved: Vec<Saved<T>>,
    /// Post-activation outputs of ReLU layers.
    relu_out: Vec<Option<Vec<T>>>,
}

impl<T: Scalar> Trace<T> {
    /// On/off state of every ReLU unit, for detecting kinks.
    pub fn relu_pattern(&self) -> Vec<bool> {
        self.relu_out
            .iter()
            .flatten()
            .flat_map(|o| o.iter().map(|v| *v > T::zero()))
            .collect()
    }
}

impl<T: Scalar> Network<T> {
    /// Glorot-uniform weights and zero biases from a seed.
    pub fn new(spec: NetworkSpec, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(spec)?;
        for (k, (layer, &input)) in net.spec.layers.iter().zip(&net.shapes).enumerate() {
            let Some((wshape, _)) = layer.param_shapes(input) else {
                continue;
            };
            let (fan_in, fan_out) = match *layer {
                LayerSpec::Conv1d { kernel, filters, .. } => (kernel * wshape[1], kernel * filters),
                _ => (wshape[0], wshape[1]),
            };
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut rng = derived_rng(seed, "init", k as u64);
            for w in &mut net.params[k].weight {
                *w = T::of_f64(rng.gen_range(-limit..=limit));
            }
        }
        Ok(net)
    }

    pub fn zeros(spec: NetworkSpec) -> Result<Self> {
        let shapes = spec.shapes()?;
        let params = spec
            .layers
            .iter()
            .zip(&shapes)
            .map(|(l, &s)| match l.param_shapes(s) {
                Some((w, b)) => LayerParams {
                    weight: vec![T::zero(); w.iter().product()],
                    bias: vec![T::zero(); b],
                },
                None => LayerParams::default(),
            })
            .collect();
        Ok(Self { spec, shapes, params })
    }

    pub fn from_params(spec: NetworkSpec, params: Vec<LayerParams<T>>) -> Result<Self> {
        let mut net = Self::zeros(spec)?;
        if params.len() != net.params.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} parameter groups for {} layers",
                params.len(),
                net.params.len()
            )));
        }
        for (k, (have, want)) in params.iter().zip(&net.params).enumerate() {
            if have.weight.len() != want.weight.len() || have.bias.len() != want.bias.len() {
                return Err(Error::ShapeMismatch(format!(
                    "layer {k}: got {}+{} parameters, expected {}+{}",
                    have.weight.len(),
                    have.bias.len(),
                    want.weight.len(),
                    want.bias.len()
                )));
            }
        }
        net.params = params;
        Ok(net)
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    /// Input shape followed by each layer's output shape.
    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    pub fn params(&self) -> &[LayerParams<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [LayerParams<T>] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(LayerParams::len).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|l| l.iter().all(|v| v.is_finite()))
    }

    /// Same weights in another precision.
    pub fn cast<U: Scalar>(&self) -> Network<U> {
        let conv = |v: &[T]| v.iter().map(|x| U::of_f64(x.as_f64())).collect();
        Network {
            spec: self.spec.clone(),
            shapes: self.shapes.clone(),
            params: self
                .params
                .iter()
                .map(|p| LayerParams {
                    weight: conv(&p.weight),
                    bias: conv(&p.bias),
                })
                .collect(),
        }
    }

    fn check_input(&self, input: &Tensor<T>) -> Result<usize> {
        let expect = self.shapes[0].dims();
        let shape = input.shape();
        if shape.len() != 3 || shape[1..] != expect[..] {
            return Err(Error::ShapeMismatch(format!(
                "input {:?}, expected (batch, {}, {})",
                shape, expect[0], expect[1]
            )));
        }
        Ok(shape[0])
    }

    fn output_tensor(&self, batch: usize, data: Vec<T>) -> Tensor<T> {
        let mut shape = vec![batch];
        shape.extend(self.shapes.last().unwrap().dims());
        Tensor::new(shape, data).expect("output size follows from the shape chain")
    }

    /// Batch forward pass; input `(batch, W, C)`.
    pub fn forward(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let batch = self.check_input(input)?;
        let (out, _) = self.run(batch, input.data().to_vec(), false);
        Ok(self.output_tensor(batch, out))
    }

    pub fn forward_traced(&self, input: &Tensor<T>) -> Result<(Tensor<T>, Trace<T>)> {
        let batch = self.check_input(input)?;
        let (out, trace) = self.run(batch, input.data().to_vec(), true);
        Ok((self.output_tensor(batch, out), trace))
    }

    fn run(&self, batch: usize, mut x: Vec<T>, keep: bool) -> (Vec<T>, Trace<T>) {
        let mut trace = Trace {
            batch,
            saved: Vec::new(),
            relu_out: Vec::new(),
        };
        for (k, layer) in self.spec.layers.iter().enumerate() {
            let (input, output) = (self.shapes[k], self.shapes[k + 1]);
            let p = &self.params[k];
            let (mut y, saved) = match *layer {
                LayerSpec::Conv1d {
                    kernel, padding, ..
                } => {
                    let cols = im2col(&x, batch, input, output, kernel, padding);
                    let (olen, f) = seq(output);
                    let rows = batch * olen;
                    let mut y = vec![T::zero(); rows * f];
                    matmul(rows, kernel * seq(input).1, f, &cols, false, &p.weight, false, &mut y, false);
                    add_bias(&mut y, &p.bias);
                    (y, if keep { Saved::Cols(cols) } else { Saved::Nothing })
                }
                LayerSpec::Dense { units, .. } => {
                    let n = input.size();
                    let mut y = vec![T::zero(); batch * units];
                    matmul(batch, n, units, &x, false, &p.weight, false, &mut y, false);
                    add_bias(&mut y, &p.bias);
                    (y, if keep { Saved::Input(x) } else { Saved::Nothing })
                }
                LayerSpec::Flatten | LayerSpec::Reshape { .. } => (x, Saved::Nothing),
                LayerSpec::ZeroPad1d { left, .. } => {
                    let (len, c) = seq(input);
                    let olen = seq(output).0;
                    let mut y = vec![T::zero(); batch * olen * c];
                    for b in 0..batch {
                        let dst = (b * olen + left) * c;
                        y[dst..dst + len * c].copy_from_slice(&x[b * len * c..(b + 1) * len * c]);
                    }
                    (y, Saved::Nothing)
                }
            };
            let relu = layer.activation() == Activation::Relu;
            if relu {
                for v in &mut y {
                    if !(*v > T::zero()) {
                        *v = T::zero();
                    }
                }
            }
            if keep {
                trace.saved.push(saved);
                trace.relu_out.push(relu.then(|| y.clone()));
            }
            x = y;
        }
        (x, trace)
    }

    /// Gradients given dL/d(output) for the traced batch.
    pub fn backward(&self, trace: &Trace<T>, d_output: &[T]) -> Result<Gradients<T>> {
        let batch = trace.batch;
        let out_size = self.shapes.last().unwrap().size();
        if d_output.len() != batch * out_size || trace.saved.len() != self.spec.layers.len() {
            return Err(Error::ShapeMismatch(format!(
                "output gradient has {} elements, expected {}",
                d_output.len(),
                batch * out_size
            )));
        }
        let mut grads: Vec<LayerParams<T>> = self.params.iter().map(LayerParams::zeros_like).collect();
        let mut d = d_output.to_vec();
        for k in (0..self.spec.layers.len()).rev() {
            let layer = &self.spec.layers[k];
            let (input, output) = (self.shapes[k], self.shapes[k + 1]);
            if let Some(out) = &trace.relu_out[k] {
                for (g, o) in d.iter_mut().zip(out) {
                    if !(*o > T::zero()) {
                        *g = T::zero();
                    }
                }
            }
            let need_dx = k > 0;
            let p = &self.params[k];
            let g = &mut grads[k];
            d = match (*layer, &trace.saved[k]) {
                (
                    LayerSpec::Conv1d {
                        kernel, padding, ..
                    },
                    Saved::Cols(cols),
                ) => {
                    let (olen, f) = seq(output);
                    let cin = seq(input).1;
                    let rows = batch * olen;
                    let kc = kernel * cin;
                    matmul(kc, rows, f, cols, true, &d, false, &mut g.weight, false);
                    sum_rows(&d, f, &mut g.bias);
                    if need_dx {
                        let mut dcols = vec![T::zero(); rows * kc];
                        matmul(rows, f, kc, &d, false, &p.weight, true, &mut dcols, false);
                        col2im(&dcols, batch, input, output, kernel, padding)
                    } else {
                        Vec::new()
                    }
                }
                (LayerSpec::Dense { units, .. }, Saved::Input(x)) => {
                    let n = input.size();
                    matmul(n, batch, units, x, true, &d, false, &mut g.weight, false);
                    sum_rows(&d, units, &mut g.bias);
                    if need_dx {
                        let mut dx = vec![T::zero(); batch * n];
                        matmul(batch, units, n, &d, false, &p.weight, true, &mut dx, false);
                        dx
                    } else {
                        Vec::new()
                    }
                }
                (LayerSpec::Flatten | LayerSpec::Reshape { .. }, _) => d,
                (LayerSpec::ZeroPad1d { left, .. }, _) => {
                    let (len, c) = seq(input);
                    let olen = seq(output).0;
                    let mut dx = vec![T::zero(); batch * len * c];
                    for b in 0..batch {
                        let src = (b * olen + left) * c;
                        dx[b * len * c..(b + 1) * len * c].copy_from_slice(&d[src..src + len * c]);
                    }
                    dx
                }
                _ => {
                    return Err(Error::InvalidArgument(
                        "trace was recorded without intermediate values".into(),
                    ))
                }
            };
        }
        Ok(Gradients { layers: grads })
    }

    /// Mean squared error over all output elements and its gradients.
    pub fn loss_and_gradients(&self, input: &Tensor<T>, target: &Tensor<T>) -> Result<(f64, Gradients<T>)> {
        let (out, trace) = self.forward_traced(input)?;
        if out.shape() != target.shape() {
            return Err(Error::ShapeMismatch(format!(
                "target {:?} vs output {:?}",
                target.shape(),
                out.shape()
            )));
        }
        let loss = mse(out.data(), target.data());
        if !loss.is_finite() {
            return Err(Error::NonFinite("training loss".into()));
        }
        let scale = 2.0 / out.len() as f64;
        let d: Vec<T> = out
            .data()
            .iter()
            .zip(target.data())
            .map(|(o, t)| T::of_f64((o.as_f64() - t.as_f64()) * scale))
            .collect();
        Ok((loss, self.backward(&trace, &d)?))
    }
}

/// Mean squared error accumulated in 64 bits.
pub fn mse<T: Scalar>(output: &[T], target: &[T]) -> f64 {
    if output.is_empty() {
        return 0.0;
    }
    let sum: f64 = output
        .iter()
        .zip(target)
        .map(|(o, t)| {
            let e = o.as_f64() - t.as_f64();
            e * e
        })
        .sum();
    sum / output.len() as f64
}

fn seq(s: Shape) -> (usize, usize) {
    match s {
        Shape::Seq { len, channels } => (len, channels),
        Shape::Flat(n) => (n, 1),
    }
}

fn pad_left(kernel: usize, padding: Padding) -> usize {
    match padding {
        Padding::Valid => 0,
        Padding::Same => same_padding(kernel).0,
    }
}

fn add_bias<T: Scalar>(y: &mut [T], bias: &[T]) {
    for row in y.chunks_exact_mut(bias.len()) {
        for (v, b) in row.iter_mut().zip(bias) {
            *v = *v + *b;
        }
    }
}

fn sum_rows<T: Scalar>(d: &[T], width: usize, out: &mut [T]) {
    let mut acc = vec![0.0f64; width];
    for row in d.chunks_exact(width) {
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v.as_f64();
        }
    }
    for (o, a) in out.iter_mut().zip(acc) {
        *o = T::of_f64(a);
    }
}

fn im2col<T: Scalar>(x: &[T], batch: usize, input: Shape, output: Shape, kernel: usize, padding: Padding) -> Vec<T> {
    let (len, c) = seq(input);
    let olen = seq(output).0;
    let pl = pad_left(kernel, padding);
    let kc = kernel * c;
    let mut cols = vec![T::zero(); batch * olen * kc];
    for b in 0..batch {
        for t in 0..olen {
            let row = &mut cols[(b * olen + t) * kc..(b * olen + t + 1) * kc];
            for j in 0..kernel {
                let Some(src) = (t + j).checked_sub(pl).filter(|&s| s < len) else {
                    continue;
                };
                let from = (b * len + src) * c;
                row[j * c..(j + 1) * c].copy_from_slice(&x[from..from + c]);
            }
        }
    }
    cols
}

fn col2im<T: Scalar>(
    dcols: &[T],
    batch: usize,
    input: Shape,
    output: Shape,
    kernel: usize,
    padding: Padding,
) -> Vec<T> {
    let (len, c) = seq(input);
    let olen = seq(output).0;
    let pl = pad_left(kernel, padding);
    let kc = kernel * c;
    let mut dx = vec![T::zero(); batch * len * c];
    for b in 0..batch {
        for t in 0..olen {
            let row = &dcols[(b * olen + t) * kc..(b * olen + t + 1) * kc];
            for j in 0..kernel {
                let Some(src) = (t + j).checked_sub(pl).filter(|&s| s < len) else {
                    continue;
                };
                let to = (b * len + src) * c;
                for (a, g) in dx[to..to + c].iter_mut().zip(&row[j * c..(j + 1) * c]) {
                    *a = *a + *g;
                }
            }
        }
    }
    dx
}
