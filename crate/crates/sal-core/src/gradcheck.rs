//! Central finite-difference verification of analytic gradients.
//!
//! The oracle never touches [`crate::nn::backward`]: it evaluates a
//! caller-supplied scalar loss under ±h parameter perturbations and compares
//! the result against an already-computed [`GradientSet`]. The reported error
//! is the vector form `‖g − ĝ‖₂ / (‖g‖₂ + ‖ĝ‖₂)` over all checked
//! components, which is robust to individual near-zero entries.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::nn::{GradientSet, Network};
use crate::rng;
use crate::Result;

/// Outcome of one finite-difference comparison.
#[derive(Debug, Clone, Copy)]
pub struct GradCheck {
    /// `‖analytic − fd‖₂ / (‖analytic‖₂ + ‖fd‖₂)`; 0 when both are zero.
    pub rel_err: f64,
    /// Number of parameter components compared.
    pub checked: usize,
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    Weight(usize),
    Bias(usize),
}

fn perturbed_eval(
    net: &Network,
    loss: &impl Fn(&Network) -> Result<f64>,
    layer: usize,
    slot: Slot,
    h: f64,
) -> Result<f64> {
    let mut plus = net.clone();
    let mut minus = net.clone();
    match slot {
        Slot::Weight(i) => {
            let w = plus.layers_mut()[layer].weights.as_slice_mut().expect("contiguous");
            w[i] += h;
            let w = minus.layers_mut()[layer].weights.as_slice_mut().expect("contiguous");
            w[i] -= h;
        }
        Slot::Bias(i) => {
            plus.layers_mut()[layer].bias[i] += h;
            minus.layers_mut()[layer].bias[i] -= h;
        }
    }
    Ok((loss(&plus)? - loss(&minus)?) / (2.0 * h))
}

/// Compare `analytic` against central finite differences of `loss`.
///
/// `sample`: `None` checks every parameter; `Some((k, seed))` checks `k`
/// seeded-random weight components plus one bias per layer, which keeps deep
/// networks tractable.
pub fn check_against_fd(
    net: &Network,
    analytic: &GradientSet,
    loss: impl Fn(&Network) -> Result<f64>,
    sample: Option<(usize, u64)>,
    h: f64,
) -> Result<GradCheck> {
    let mut picks: Vec<(usize, Slot)> = Vec::new();
    for (l, layer) in net.layers().iter().enumerate() {
        let n_w = layer.weights.len();
        let n_b = layer.bias.len();
        match sample {
            None => {
                picks.extend((0..n_w).map(|i| (l, Slot::Weight(i))));
                picks.extend((0..n_b).map(|i| (l, Slot::Bias(i))));
            }
            Some((k, seed)) => {
                let mut rng = rng::stream_indexed(seed, "fd-sample", l as u64);
                let mut idx: Vec<usize> = (0..n_w).collect();
                idx.shuffle(&mut rng);
                picks.extend(idx.into_iter().take(k.min(n_w)).map(|i| (l, Slot::Weight(i))));
                let bias_pick = rng.random_range(0..n_b);
                picks.push((l, Slot::Bias(bias_pick)));
            }
        }
    }

    let mut diff_sq = 0.0;
    let mut a_sq = 0.0;
    let mut f_sq = 0.0;
    for (l, slot) in &picks {
        let a = match *slot {
            Slot::Weight(i) => analytic.layers[*l].weights.as_slice().expect("contiguous")[i],
            Slot::Bias(i) => analytic.layers[*l].bias[i],
        };
        let f = perturbed_eval(net, &loss, *l, *slot, h)?;
        diff_sq += (a - f) * (a - f);
        a_sq += a * a;
        f_sq += f * f;
    }
    let denom = a_sq.sqrt() + f_sq.sqrt();
    let rel_err = if denom == 0.0 { 0.0 } else { diff_sq.sqrt() / denom };
    Ok(GradCheck { rel_err, checked: picks.len() })
}
