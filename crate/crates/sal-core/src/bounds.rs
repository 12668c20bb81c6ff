//! Generalization-bound calculators and their empirical validators.
//!
//! The softmax cross-entropy loss is Lipschitz in its logits: the gradient
//! norm is at most `n√n` for targets in `[0,1]^n` and at most `√2` when the
//! target is one-hot. From that constant `C` follow two closed forms used
//! throughout:
//!
//! - sample size: `m ≥ n·ln(1/δ) / (2(ε − μ)²)` guarantees the empirical
//!   loss gap stays under `C·ε` with probability `1 − δ`;
//! - risk bound: `R(f) ≤ R̂_S(h) + 2·R̂_S(H) + 3√(log(2/δ)/2m) + C·ε`.
//!
//! Function classes are represented by finite evaluation matrices, so the
//! Rademacher estimator is a Monte-Carlo lower-bound proxy for the true
//! supremum over an infinite class.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::nn::softmax_ce;
use crate::rng;
use crate::{Error, Result};

/// Inputs shared by the bound calculators.
#[derive(Debug, Clone, Copy)]
pub struct BoundInputs {
    /// Class count.
    pub n: usize,
    /// Failure probability, in (0, 1).
    pub delta: f64,
    /// Alignment tolerance, > μ.
    pub eps: f64,
    /// True mean alignment gap, in [0, ε).
    pub mu: f64,
    /// Sample count.
    pub m: usize,
    /// Lipschitz constant of the loss.
    pub lipschitz: f64,
    /// Empirical loss `R̂_S(h)` of the simpler model.
    pub empirical_loss: f64,
    /// Empirical Rademacher complexity estimate `R̂_S(H)`.
    pub rademacher: f64,
}

impl BoundInputs {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        delta: f64,
        eps: f64,
        mu: f64,
        m: usize,
        lipschitz: f64,
        empirical_loss: f64,
        rademacher: f64,
    ) -> Result<Self> {
        if n < 1 {
            return Err(Error::Domain("class count must be >= 1".into()));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Domain(format!("delta {delta} outside (0, 1)")));
        }
        if !(eps > 0.0) {
            return Err(Error::Domain("eps must be > 0".into()));
        }
        if !(mu >= 0.0 && mu < eps) {
            return Err(Error::Domain(format!("mu {mu} outside [0, eps = {eps})")));
        }
        if m < 1 {
            return Err(Error::Domain("sample count must be >= 1".into()));
        }
        if !(lipschitz > 0.0) {
            return Err(Error::Domain("Lipschitz constant must be > 0".into()));
        }
        if empirical_loss < 0.0 || rademacher < 0.0 {
            return Err(Error::Domain("loss and Rademacher terms must be >= 0".into()));
        }
        Ok(BoundInputs { n, delta, eps, mu, m, lipschitz, empirical_loss, rademacher })
    }

    /// Minimum sample count for this instance; see [`hoeffding_sample_size`].
    pub fn hoeffding_sample_size(&self) -> u64 {
        hoeffding_sample_size(self.n, self.delta, self.eps, self.mu)
            .expect("validated at construction")
    }
}

/// Lipschitz constant of softmax cross-entropy for targets in `[0,1]^n`: `n√n`.
pub fn lipschitz_bound_general(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain("class count must be >= 1".into()));
    }
    Ok(n as f64 * (n as f64).sqrt())
}

/// Tightened constant for one-hot targets: `√2`.
pub fn lipschitz_bound_onehot() -> f64 {
    std::f64::consts::SQRT_2
}

/// Result of a gradient-norm sweep; `max_norm <= bound` always holds, a
/// violation is reported as a numeric error since it would falsify the
/// Lipschitz argument.
#[derive(Debug, Clone, Copy)]
pub struct GradNormReport {
    pub max_norm: f64,
    pub bound: f64,
    pub trials: usize,
}

/// Sample `trials` random logit/target pairs, compute each exact CE logit
/// gradient, and report the largest ℓ₂ norm seen.
///
/// One-hot mode draws a uniform class; otherwise targets are uniform in
/// `[0,1]^n`. Logit scales vary over several orders of magnitude so the
/// saturated regions are exercised.
pub fn validate_grad_norm(n: usize, trials: usize, seed: u64, one_hot: bool) -> Result<GradNormReport> {
    if n < 1 {
        return Err(Error::Domain("class count must be >= 1".into()));
    }
    if trials < 1 {
        return Err(Error::Domain("need at least one trial".into()));
    }
    let bound = if one_hot { lipschitz_bound_onehot() } else { lipschitz_bound_general(n)? };
    let normal = Normal::new(0.0, 1.0).expect("valid parameters");
    let mut rng = rng::stream(seed, if one_hot { "grad-norm-onehot" } else { "grad-norm" });
    let mut max_norm: f64 = 0.0;
    for _ in 0..trials {
        let scale = 10f64.powf(rng.random_range(-2.0..3.0));
        let logits = Array1::from_shape_fn(n, |_| scale * normal.sample(&mut rng));
        let target = if one_hot {
            let mut t = Array1::zeros(n);
            t[rng.random_range(0..n)] = 1.0;
            t
        } else {
            Array1::from_shape_fn(n, |_| rng.random_range(0.0..=1.0))
        };
        let (_, grad) = softmax_ce(logits.view(), target.view())?;
        let norm = grad.dot(&grad).sqrt();
        max_norm = max_norm.max(norm);
    }
    if max_norm > bound {
        return Err(Error::Numeric(format!(
            "gradient norm {max_norm} exceeded the Lipschitz bound {bound}"
        )));
    }
    Ok(GradNormReport { max_norm, bound, trials })
}

/// Minimum sample count `⌈n·ln(1/δ) / (2(ε − μ)²)⌉`, floored at 1.
pub fn hoeffding_sample_size(n: usize, delta: f64, eps: f64, mu: f64) -> Result<u64> {
    if n < 1 {
        return Err(Error::Domain("class count must be >= 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta {delta} outside (0, 1)")));
    }
    if !(eps > mu && mu >= 0.0) {
        return Err(Error::Domain(format!(
            "bound diverges: need eps > mu >= 0, got eps = {eps}, mu = {mu}"
        )));
    }
    let raw = n as f64 * (1.0 / delta).ln() / (2.0 * (eps - mu) * (eps - mu));
    Ok((raw.ceil() as u64).max(1))
}

/// Tail probability `exp(−2m(ε − μ)²/n)`; plugging the minimum sample size
/// back in yields a value ≤ δ.
pub fn hoeffding_tail(n: usize, m: u64, eps: f64, mu: f64) -> f64 {
    (-2.0 * m as f64 * (eps - mu) * (eps - mu) / n as f64).exp()
}

/// Four-term risk bound
/// `R̂_S(h) + 2·R̂_S(H) + 3√(log(2/δ)/2m) + C·ε`.
pub fn generalization_bound(inputs: &BoundInputs) -> f64 {
    inputs.empirical_loss
        + 2.0 * inputs.rademacher
        + 3.0 * ((2.0 / inputs.delta).ln() / (2.0 * inputs.m as f64)).sqrt()
        + inputs.lipschitz * inputs.eps
}

/// A finite hypothesis class evaluated on a fixed sample: column `k` holds
/// hypothesis `k`'s outputs over the `m` sample points.
#[derive(Debug, Clone)]
pub struct HypothesisSample {
    outputs: Array2<f64>,
}

impl HypothesisSample {
    pub fn new(outputs: Array2<f64>) -> Result<Self> {
        if outputs.nrows() == 0 || outputs.ncols() == 0 {
            return Err(Error::Domain("hypothesis sample must be non-empty".into()));
        }
        if outputs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite hypothesis outputs".into()));
        }
        Ok(HypothesisSample { outputs })
    }

    pub fn sample_count(&self) -> usize {
        self.outputs.nrows()
    }

    pub fn hypothesis_count(&self) -> usize {
        self.outputs.ncols()
    }
}

/// Monte-Carlo empirical Rademacher complexity:
/// mean over random sign vectors σ of `sup_h (1/m) Σᵢ σᵢ·h(xᵢ)`.
///
/// The true quantity is nonnegative (the supremum dominates every fixed
/// hypothesis, whose expectation is zero), so the estimate is clamped at 0.
pub fn estimate_rademacher(sample: &HypothesisSample, trials: usize, seed: u64) -> Result<f64> {
    if trials < 1 {
        return Err(Error::Domain("need at least one trial".into()));
    }
    let m = sample.sample_count();
    let mut rng = rng::stream(seed, "rademacher");
    let mut acc = 0.0;
    let mut signs = vec![1.0f64; m];
    for _ in 0..trials {
        for s in &mut signs {
            *s = if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
        let mut sup = f64::NEG_INFINITY;
        for h in sample.outputs.columns() {
            let v: f64 = h.iter().zip(&signs).map(|(&o, &s)| o * s).sum();
            sup = sup.max(v / m as f64);
        }
        acc += sup;
    }
    Ok((acc / trials as f64).max(0.0))
}

/// Empirical alignment gap: mean over rows of the ℓ₂ distance between the
/// two models' outputs on the same sample.
pub fn alignment_gap(f_outputs: &Array2<f64>, h_outputs: &Array2<f64>) -> Result<f64> {
    if f_outputs.raw_dim() != h_outputs.raw_dim() {
        return Err(Error::Shape(format!(
            "output shapes differ: {:?} vs {:?}",
            f_outputs.shape(),
            h_outputs.shape()
        )));
    }
    let m = f_outputs.nrows();
    if m == 0 {
        return Err(Error::Shape("empty output matrices".into()));
    }
    let mut total = 0.0;
    for (fr, hr) in f_outputs.outer_iter().zip(h_outputs.outer_iter()) {
        let d2: f64 = fr.iter().zip(hr.iter()).map(|(&a, &b)| (a - b) * (a - b)).sum();
        total += d2.sqrt();
    }
    Ok(total / m as f64)
}
