use std::fmt;

use serde::{Deserialize, Serialize};

use super::network::{Gradients, LayerParams, Network};
use super::scalar::Scalar;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Adam,
    Adamax,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Adam => "adam",
            Algorithm::Adamax => "adamax",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Denominator guard; Adam only.
    pub epsilon: f64,
}

impl OptimizerConfig {
    pub fn new(algorithm: Algorithm, learning_rate: f64) -> Self {
        Self {
            algorithm,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |b: f64| (0.0..1.0).contains(&b);
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!("learning rate {} must be > 0", self.learning_rate)));
        }
        if !unit(self.beta1) || !unit(self.beta2) {
            return Err(Error::Config(format!(
                "betas ({}, {}) must lie in [0, 1)",
                self.beta1, self.beta2
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon {} must be > 0", self.epsilon)));
        }
        Ok(())
    }
}

/// Moment estimates and step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer<T> {
    config: OptimizerConfig,
    m: Vec<LayerParams<T>>,
    v: Vec<LayerParams<T>>,
    t: u64,
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(config: OptimizerConfig, net: &Network<T>) -> Result<Self> {
        config.validate()?;
        let zeros: Vec<LayerParams<T>> = net
            .params()
            .iter()
            .map(|p| LayerParams {
                weight: vec![T::zero(); p.weight.len()],
                bias: vec![T::zero(); p.bias.len()],
            })
            .collect();
        Ok(Self {
            config,
            m: zeros.clone(),
            v: zeros,
            t: 0,
        })
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Apply one update. Rejects non-finite gradients without touching the
    /// weights.
    pub fn step(&mut self, net: &mut Network<T>, grads: &Gradients<T>) -> Result<()> {
        if grads.layers.len() != self.m.len()
            || grads
                .layers
                .iter()
                .zip(&self.m)
                .any(|(g, m)| g.weight.len() != m.weight.len() || g.bias.len() != m.bias.len())
        {
            return Err(Error::ShapeMismatch("gradients do not match the network".into()));
        }
        if !grads.all_finite() {
            return Err(Error::NonFinite("gradient".into()));
        }
        self.t += 1;
        let c = &self.config;
        let b1 = T::of_f64(c.beta1);
        let b2 = T::of_f64(c.beta2);
        let lr = T::of_f64(c.learning_rate);
        let eps = T::of_f64(c.epsilon);
        let one = T::one();
        let t = i32::try_from(self.t).unwrap_or(i32::MAX);
        let bc1 = one - b1.powi(t);
        let bc2 = one - b2.powi(t);
        let algorithm = c.algorithm;

        for ((p, g), (m, v)) in net
            .params_mut()
            .iter_mut()
            .zip(&grads.layers)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            let parts = [
                (&mut p.weight, &g.weight, &mut m.weight, &mut v.weight),
                (&mut p.bias, &g.bias, &mut m.bias, &mut v.bias),
            ];
            for (w, g, m, v) in parts {
                match algorithm {
                    Algorithm::Adam => {
                        let (s1, s2) = (lr / bc1, one / bc2);
                        for (((w, &g), m), v) in w.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                            *m = b1 * *m + (one - b1) * g;
                            *v = b2 * *v + (one - b2) * g * g;
                            *w = *w - s1 * *m / ((*v * s2).sqrt() + eps);
                        }
                    }
                    Algorithm::Adamax => {
                        for (((w, &g), m), v) in w.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                            *m = b1 * *m + (one - b1) * g;
                            *v = (b2 * *v).max(g.abs());
                            if *v > T::zero() {
                                *w = *w - lr * (*m / bc1) / *v;
                            }
                        }
                    }
                }
            }
        }
        if !net.all_finite() {
            return Err(Error::NonFinite("weights after optimizer step".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::arch::{Activation, ArchitectureKind, LayerSpec, NetworkSpec};

    fn scalar_net(w: f64) -> Network<f64> {
        let spec = NetworkSpec {
            kind: ArchitectureKind::Rectangles,
            window: 1,
            channels: 1,
            layers: vec![
                LayerSpec::Flatten,
                LayerSpec::Dense {
                    units: 1,
                    activation: Activation::Linear,
                },
            ],
        };
        Network::from_params(
            spec,
            vec![
                LayerParams::default(),
                LayerParams {
                    weight: vec![w],
                    bias: vec![0.0],
                },
            ],
        )
        .unwrap()
    }

    fn grad(g: f64) -> Gradients<f64> {
        Gradients {
            layers: vec![
                LayerParams::default(),
                LayerParams {
                    weight: vec![g],
                    bias: vec![0.0],
                },
            ],
        }
    }

    #[test]
    fn zero_gradient_leaves_weights() {
        for alg in [Algorithm::Adam, Algorithm::Adamax] {
            let mut net = scalar_net(0.75);
            let mut opt = Optimizer::new(OptimizerConfig::new(alg, 0.01), &net).unwrap();
            opt.step(&mut net, &grad(0.0)).unwrap();
            assert_eq!(net.params()[1].weight, vec![0.75]);
            assert_eq!(opt.steps(), 1);
        }
    }

    #[test]
    fn first_adam_step_is_about_lr() {
        for g in [3.0, -0.02, 1e4] {
            let mut net = scalar_net(1.0);
            let mut opt = Optimizer::new(OptimizerConfig::new(Algorithm::Adam, 0.001), &net).unwrap();
            opt.step(&mut net, &grad(g)).unwrap();
            let delta = net.params()[1].weight[0] - 1.0;
            let expect = -0.001 * g / (g.abs() + 1e-8);
            assert!((delta - expect).abs() < 1e-12, "{delta} vs {expect}");
        }
    }

    #[test]
    fn first_adamax_step_is_exactly_lr() {
        for g in [4.0, -0.5, 1024.0] {
            let mut net = scalar_net(1.0);
            let mut opt = Optimizer::new(OptimizerConfig::new(Algorithm::Adamax, 0.002), &net).unwrap();
            opt.step(&mut net, &grad(g)).unwrap();
            let expect = 1.0 - 0.002 * g.signum();
            assert_eq!(net.params()[1].weight[0], expect);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut net = scalar_net(1.0);
        let mut opt = Optimizer::new(OptimizerConfig::new(Algorithm::Adam, 0.001), &net).unwrap();
        assert!(matches!(opt.step(&mut net, &grad(f64::NAN)), Err(Error::NonFinite(_))));
        assert_eq!(net.params()[1].weight, vec![1.0]);
        assert_eq!(opt.steps(), 0);
        assert!(OptimizerConfig::new(Algorithm::Adam, 0.0).validate().is_err());
        let mut bad = OptimizerConfig::new(Algorithm::Adamax, 0.001);
        bad.beta2 = 1.0;
        assert!(bad.validate().is_err());
    }
}
