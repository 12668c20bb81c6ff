//! Dense feed-forward networks with activation-capturing forward passes and
//! exact reverse-mode gradients.
//!
//! A [`Network`] of depth `d` has `d - 1` hidden layers sharing one width and
//! one activation, plus a linear output layer emitting logits. [`forward`]
//! returns an [`ActivationTrace`] holding every intermediate value; the trace
//! is both what guidance targets are extracted from and what [`backward`]
//! consumes to produce exact gradients.
//!
//! All arrays are `f64`, batch-major: inputs are `(batch, in_dim)`, weights
//! `(out_dim, in_dim)`.

mod activation;
pub mod loss;
mod optimizer;

pub use activation::Activation;
pub use loss::{mse, softmax, softmax_ce, BackwardSignal};
pub use optimizer::{AdamParams, Optimizer, OptimizerKind};

use std::hash::{Hash, Hasher};

use ndarray::{Array1, Array2, Axis, Zip};
use rand::Rng;

use crate::rng;
use crate::{Error, Result};

/// One dense layer: `z = W x + b` with `W: (out_dim, in_dim)`.
#[derive(Debug, Clone)]
pub struct LayerParams {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LayerParams {
    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Dense feed-forward classifier.
#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<LayerParams>,
    activation: Activation,
    width: usize,
}

impl Network {
    /// Build from explicit layers. Dimensions must chain, all hidden layers
    /// must share one width, and every entry must be finite.
    pub fn from_layers(layers: Vec<LayerParams>, activation: Activation) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        let mut width = layers[0].out_dim();
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[1].in_dim() != pair[0].out_dim() {
                return Err(Error::Shape(format!(
                    "layer {} out_dim {} does not feed layer {} in_dim {}",
                    i + 1,
                    pair[0].out_dim(),
                    i + 2,
                    pair[1].in_dim()
                )));
            }
        }
        for (i, l) in layers.iter().enumerate() {
            let hidden = i + 1 < layers.len();
            if hidden && l.out_dim() != width {
                return Err(Error::Shape(format!(
                    "hidden layer {} width {} != shared width {}",
                    i + 1,
                    l.out_dim(),
                    width
                )));
            }
            if l.bias.len() != l.out_dim() {
                return Err(Error::Shape(format!("layer {} bias length mismatch", i + 1)));
            }
            if l.weights.iter().any(|v| !v.is_finite()) || l.bias.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!("layer {} has non-finite entries", i + 1)));
            }
        }
        if layers.len() == 1 {
            // depth-1 network: no hidden layers, width is a formality
            width = layers[0].in_dim();
        }
        Ok(Network { layers, activation, width })
    }

    /// Seeded initialization: uniform Kaiming fan-in scaling for ReLU,
    /// Xavier for sigmoid/tanh; biases zero.
    pub fn seeded(
        in_dim: usize,
        out_dim: usize,
        depth: usize,
        width: usize,
        activation: Activation,
        seed: u64,
    ) -> Result<Self> {
        if depth < 1 {
            return Err(Error::Config("depth must be >= 1".into()));
        }
        if in_dim < 1 || out_dim < 1 || width < 1 {
            return Err(Error::Config("dimensions must be >= 1".into()));
        }
        let mut rng = rng::stream(seed, "net-init");
        let mut layers = Vec::with_capacity(depth);
        for l in 0..depth {
            let fan_in = if l == 0 { in_dim } else { width };
            let fan_out = if l + 1 == depth { out_dim } else { width };
            let limit = match activation {
                Activation::Relu => (6.0 / fan_in as f64).sqrt(),
                Activation::Sigmoid | Activation::Tanh => {
                    (6.0 / (fan_in + fan_out) as f64).sqrt()
                }
            };
            let mut w = Vec::with_capacity(fan_out * fan_in);
            for _ in 0..fan_out * fan_in {
                w.push(rng.random_range(-limit..limit));
            }
            layers.push(LayerParams {
                weights: Array2::from_shape_vec((fan_out, fan_in), w)
                    .expect("constructed shape is consistent"),
                bias: Array1::zeros(fan_out),
            });
        }
        Network::from_layers(layers, activation)
    }

    /// Count of trainable layers, output layer included.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().expect("non-empty").out_dim()
    }

    pub fn hidden_width(&self) -> usize {
        self.width
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [LayerParams] {
        &mut self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LayerParams::param_count).sum()
    }

    /// Exact-bits digest of all parameters; used to verify that a network
    /// was not touched (e.g. the upper floor during a guidance phase).
    pub fn param_hash(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for l in &self.layers {
            for v in l.weights.iter().chain(l.bias.iter()) {
                v.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }

    /// Forward pass capturing every hidden pre/post-activation and the
    /// output logits.
    pub fn forward(&self, batch: &Array2<f64>) -> Result<ActivationTrace> {
        forward(self, batch)
    }
}

/// All layer values captured during one forward pass.
///
/// `pre[l]`/`post[l]` are the hidden layer `l + 1` values (1-based layer
/// indexing elsewhere); `logits` is the output layer's raw value. The input
/// batch is kept so a backward pass needs no other context.
#[derive(Debug, Clone)]
pub struct ActivationTrace {
    pub input: Array2<f64>,
    pub pre: Vec<Array2<f64>>,
    pub post: Vec<Array2<f64>>,
    pub logits: Array2<f64>,
}

impl ActivationTrace {
    pub fn batch_size(&self) -> usize {
        self.input.nrows()
    }

    /// Network depth this trace was captured from.
    pub fn depth(&self) -> usize {
        self.pre.len() + 1
    }
}

/// Per-layer gradients, shape-matched to the network's parameters.
#[derive(Debug, Clone)]
pub struct GradientSet {
    pub layers: Vec<LayerGrad>,
}

#[derive(Debug, Clone)]
pub struct LayerGrad {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl GradientSet {
    pub fn zeros_like(net: &Network) -> Self {
        GradientSet {
            layers: net
                .layers()
                .iter()
                .map(|l| LayerGrad {
                    weights: Array2::zeros(l.weights.raw_dim()),
                    bias: Array1::zeros(l.bias.raw_dim()),
                })
                .collect(),
        }
    }

    /// Frobenius norm of the weight gradient of layer `l` (0-based).
    /// Biases are excluded by convention.
    pub fn weight_frobenius(&self, l: usize) -> f64 {
        self.layers[l].weights.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_all_zero(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().all(|v| *v == 0.0) && l.bias.iter().all(|v| *v == 0.0))
    }
}

/// Forward pass over a batch; see [`Network::forward`].
pub fn forward(net: &Network, batch: &Array2<f64>) -> Result<ActivationTrace> {
    if batch.ncols() != net.in_dim() {
        return Err(Error::Shape(format!(
            "input has {} columns, network expects {}",
            batch.ncols(),
            net.in_dim()
        )));
    }
    let depth = net.depth();
    let mut pre = Vec::with_capacity(depth - 1);
    let mut post = Vec::with_capacity(depth - 1);
    let mut a = batch.clone();
    for (l, layer) in net.layers().iter().enumerate() {
        let z = a.dot(&layer.weights.t()) + &layer.bias;
        if l + 1 == depth {
            return Ok(ActivationTrace { input: batch.clone(), pre, post, logits: z });
        }
        let act = net.activation();
        let a_next = z.mapv(|v| act.apply(v));
        pre.push(z);
        post.push(a_next.clone());
        a = a_next;
    }
    unreachable!("loop returns at the output layer");
}

/// Exact reverse-mode gradients of a scalar loss.
///
/// The loss enters through a [`BackwardSignal`]: the gradient at the output
/// logits plus optional gradients injected at hidden post-activations. This
/// covers both heads used in training — cross-entropy at the output only,
/// and the multi-layer MSE guidance head, which contributes a term at every
/// mapped hidden layer.
pub fn backward(net: &Network, trace: &ActivationTrace, signal: &BackwardSignal) -> Result<GradientSet> {
    let depth = net.depth();
    if trace.depth() != depth {
        return Err(Error::Shape(format!(
            "trace depth {} does not match network depth {}",
            trace.depth(),
            depth
        )));
    }
    if signal.logit_grad.raw_dim() != trace.logits.raw_dim() {
        return Err(Error::Shape("logit gradient shape mismatch".into()));
    }
    if signal.hidden_grads.len() != depth - 1 {
        return Err(Error::Shape(format!(
            "signal carries {} hidden slots, network has {} hidden layers",
            signal.hidden_grads.len(),
            depth - 1
        )));
    }

    let act = net.activation();
    let mut grads: Vec<LayerGrad> = Vec::with_capacity(depth);
    let mut delta = signal.logit_grad.clone();
    for l in (0..depth).rev() {
        let a_prev = if l == 0 { &trace.input } else { &trace.post[l - 1] };
        grads.push(LayerGrad {
            weights: delta.t().dot(a_prev),
            bias: delta.sum_axis(Axis(0)),
        });
        if l > 0 {
            let mut da = delta.dot(&net.layers()[l].weights);
            if let Some(h) = &signal.hidden_grads[l - 1] {
                if h.raw_dim() != da.raw_dim() {
                    return Err(Error::Shape(format!(
                        "injected gradient at hidden layer {l} has wrong shape"
                    )));
                }
                da += h;
            }
            let z = &trace.pre[l - 1];
            let a = &trace.post[l - 1];
            Zip::from(&mut da).and(z).and(a).for_each(|d, &zv, &av| {
                *d *= act.derivative(zv, av);
            });
            delta = da;
        }
    }
    grads.reverse();
    Ok(GradientSet { layers: grads })
}
