//! SGD and Adam. One optimizer instance owns the state for one network and
//! persists across training phases and steps.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{GradientSet, Network};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Adam hyperparameters; defaults are the standard β₁ = 0.9, β₂ = 0.999,
/// ε = 1e-8.
#[derive(Debug, Clone, Copy)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone)]
struct Moments {
    m_w: Array2<f64>,
    v_w: Array2<f64>,
    m_b: Array1<f64>,
    v_b: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    adam: AdamParams,
    moments: Option<Vec<Moments>>,
    t: u64,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64) -> Self {
        Optimizer { kind, lr, adam: AdamParams::default(), moments: None, t: 0 }
    }

    pub fn with_adam_params(mut self, adam: AdamParams) -> Self {
        self.adam = adam;
        self
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    /// Apply one update. Adam state is allocated lazily on first use and must
    /// keep matching the network's shapes afterwards.
    pub fn step(&mut self, net: &mut Network, grads: &GradientSet) -> Result<()> {
        if grads.layers.len() != net.depth() {
            return Err(Error::Shape("gradient/network layer count mismatch".into()));
        }
        for (l, g) in net.layers().iter().zip(&grads.layers) {
            if g.weights.raw_dim() != l.weights.raw_dim() || g.bias.raw_dim() != l.bias.raw_dim() {
                return Err(Error::Shape("gradient/parameter shape mismatch".into()));
            }
        }
        match self.kind {
            OptimizerKind::Sgd => {
                for (l, g) in net.layers_mut().iter_mut().zip(&grads.layers) {
                    l.weights.scaled_add(-self.lr, &g.weights);
                    l.bias.scaled_add(-self.lr, &g.bias);
                }
            }
            OptimizerKind::Adam => {
                if self.moments.is_none() {
                    self.moments = Some(
                        net.layers()
                            .iter()
                            .map(|l| Moments {
                                m_w: Array2::zeros(l.weights.raw_dim()),
                                v_w: Array2::zeros(l.weights.raw_dim()),
                                m_b: Array1::zeros(l.bias.raw_dim()),
                                v_b: Array1::zeros(l.bias.raw_dim()),
                            })
                            .collect(),
                    );
                }
                self.t += 1;
                let AdamParams { beta1, beta2, eps } = self.adam;
                let bc1 = 1.0 - beta1.powi(self.t as i32);
                let bc2 = 1.0 - beta2.powi(self.t as i32);
                let lr = self.lr;
                let moments = self.moments.as_mut().expect("initialized above");
                for ((l, g), st) in
                    net.layers_mut().iter_mut().zip(&grads.layers).zip(moments.iter_mut())
                {
                    if st.m_w.raw_dim() != g.weights.raw_dim() {
                        return Err(Error::Shape("optimizer state shape mismatch".into()));
                    }
                    ndarray::Zip::from(&mut l.weights)
                        .and(&mut st.m_w)
                        .and(&mut st.v_w)
                        .and(&g.weights)
                        .for_each(|w, m, v, &grad| {
                            *m = beta1 * *m + (1.0 - beta1) * grad;
                            *v = beta2 * *v + (1.0 - beta2) * grad * grad;
                            *w -= lr * (*m / bc1) / ((*v / bc2).sqrt() + eps);
                        });
                    ndarray::Zip::from(&mut l.bias)
                        .and(&mut st.m_b)
                        .and(&mut st.v_b)
                        .and(&g.bias)
                        .for_each(|w, m, v, &grad| {
                            *m = beta1 * *m + (1.0 - beta1) * grad;
                            *v = beta2 * *v + (1.0 - beta2) * grad * grad;
                            *w -= lr * (*m / bc1) / ((*v / bc2).sqrt() + eps);
                        });
                }
            }
        }
        Ok(())
    }
}
