//! Floor stack construction and the guidance mapping between floors.
//!
//! A stack holds `F` networks ordered from the topmost (simplest) floor down
//! to floor 1, the bottom model that matches the plain baseline. Floor `f`
//! (counted from the bottom) halves the base architecture `f − 1` times:
//! depth `⌊D / 2^{f−1}⌋`, hidden width `⌊W₀ / 2^{f−1}⌋`.
//!
//! During a guidance phase the upper floor's hidden and output values are
//! extracted as fixed targets and the lower floor minimizes element-wise MSE
//! against them. Upper hidden layer `j` maps to lower hidden layer
//! `⌈j·d_lower/d_upper⌉`; a wider lower layer is matched on its first
//! `W_upper` units and the remaining units stay unconstrained. The output
//! entry compares raw logits to raw logits.

use ndarray::{s, Array2};
use serde::Serialize;

use crate::nn::{mse, Activation, ActivationTrace, BackwardSignal, Network};
use crate::rng;
use crate::{Error, Result};

/// Architecture of one floor. `floor_index` counts from 1 at the bottom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FloorSpec {
    pub floor_index: usize,
    pub depth: usize,
    pub width: usize,
}

/// Closed-form floor architecture: depth `⌊D / 2^{f−1}⌋`, width `⌊W₀ / 2^{f−1}⌋`.
pub fn floor_spec(base_depth: usize, base_width: usize, floor_index: usize) -> FloorSpec {
    let halvings = 1usize << (floor_index - 1);
    FloorSpec { floor_index, depth: base_depth / halvings, width: base_width / halvings }
}

/// One floor: its spec plus the live network.
#[derive(Debug, Clone)]
pub struct Floor {
    pub spec: FloorSpec,
    pub net: Network,
}

/// Floors ordered topmost (simplest) first, bottom (floor 1) last.
#[derive(Debug, Clone)]
pub struct FloorStack {
    floors: Vec<Floor>,
}

impl FloorStack {
    /// Build `floor_count` independently seeded networks per the halving rule.
    ///
    /// Floor 1 always carries the base `(D, W₀)` architecture, so it is
    /// layer-for-layer identical to the plain baseline.
    pub fn build(
        base_depth: usize,
        base_width: usize,
        floor_count: usize,
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        seed: u64,
    ) -> Result<Self> {
        if floor_count < 1 {
            return Err(Error::Config("floor count must be >= 1".into()));
        }
        let halvings = 1usize << (floor_count - 1);
        if base_depth < halvings {
            return Err(Error::Config(format!(
                "{floor_count} floors need base depth >= {halvings}, got {base_depth}"
            )));
        }
        if base_width < halvings {
            return Err(Error::Config(format!(
                "{floor_count} floors need base width >= {halvings}, got {base_width}"
            )));
        }
        let mut floors = Vec::with_capacity(floor_count);
        for f in (1..=floor_count).rev() {
            let spec = floor_spec(base_depth, base_width, f);
            let net = Network::seeded(
                in_dim,
                out_dim,
                spec.depth,
                spec.width,
                activation,
                rng::derive(seed, &format!("floor-{f}")),
            )?;
            floors.push(Floor { spec, net });
        }
        Ok(FloorStack { floors })
    }

    pub fn floor_count(&self) -> usize {
        self.floors.len()
    }

    /// Floor by 1-based index (1 = bottom).
    pub fn get(&self, floor_index: usize) -> &Floor {
        &self.floors[self.floors.len() - floor_index]
    }

    pub fn get_mut(&mut self, floor_index: usize) -> &mut Floor {
        let i = self.floors.len() - floor_index;
        &mut self.floors[i]
    }

    /// Mutable lower floor `f` together with its immutable upper neighbour
    /// `f + 1`; the borrow split is what keeps the upper floor untouchable
    /// during guidance.
    pub fn lower_and_upper(&mut self, lower_index: usize) -> (&mut Floor, &Floor) {
        let pos_lower = self.floors.len() - lower_index;
        let (head, tail) = self.floors.split_at_mut(pos_lower);
        (&mut tail[0], &head[head.len() - 1])
    }

    /// Specs listed floor 1 first; the order used in run metadata.
    pub fn specs_bottom_up(&self) -> Vec<FloorSpec> {
        self.floors.iter().rev().map(|f| f.spec).collect()
    }

    pub fn iter_top_down(&self) -> impl Iterator<Item = &Floor> {
        self.floors.iter()
    }
}

/// One guided hidden-layer pair; layer indices are 1-based within each floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HiddenPair {
    pub upper_layer: usize,
    pub lower_layer: usize,
    pub width_overlap: usize,
}

/// Correspondence between an upper floor's layers and a lower floor's.
///
/// Every upper hidden layer appears exactly once and mapped lower indices
/// are strictly increasing; the output entry is always present.
#[derive(Debug, Clone)]
pub struct GuidanceMapping {
    pub hidden: Vec<HiddenPair>,
    upper_depth: usize,
    lower_depth: usize,
}

impl GuidanceMapping {
    pub fn upper_depth(&self) -> usize {
        self.upper_depth
    }

    pub fn lower_depth(&self) -> usize {
        self.lower_depth
    }
}

/// Map upper hidden layer `j` to lower hidden layer `⌈j·d_l/d_u⌉` with
/// overlap `min(W_u, W_l) = W_u`; output maps to output.
///
/// A depth-1 upper floor has no hidden layers and guides through its output
/// alone.
pub fn map_layers(upper: &FloorSpec, lower: &FloorSpec) -> Result<GuidanceMapping> {
    if upper.depth > lower.depth {
        return Err(Error::Config(format!(
            "upper depth {} exceeds lower depth {}",
            upper.depth, lower.depth
        )));
    }
    if upper.width > lower.width {
        return Err(Error::Config(format!(
            "upper width {} exceeds lower width {}",
            upper.width, lower.width
        )));
    }
    let hidden = (1..upper.depth)
        .map(|j| HiddenPair {
            upper_layer: j,
            lower_layer: (j * lower.depth).div_ceil(upper.depth),
            width_overlap: upper.width,
        })
        .collect();
    Ok(GuidanceMapping { hidden, upper_depth: upper.depth, lower_depth: lower.depth })
}

/// Stored upper-floor values serving as fixed regression targets for one
/// mini-batch. Plain owned arrays: nothing here participates in any gradient
/// flow, so the detachment contract holds by construction.
#[derive(Debug, Clone)]
pub struct GuidanceTargets {
    /// `(lower_layer_index, upper post-activations)` per mapped hidden pair.
    pub hidden: Vec<(usize, Array2<f64>)>,
    /// Upper output logits.
    pub output: Array2<f64>,
}

/// Copy the mapped values out of an upper-floor trace.
pub fn extract_targets(upper_trace: &ActivationTrace, mapping: &GuidanceMapping) -> Result<GuidanceTargets> {
    if upper_trace.depth() != mapping.upper_depth {
        return Err(Error::Shape(format!(
            "trace depth {} does not match mapping's upper depth {}",
            upper_trace.depth(),
            mapping.upper_depth
        )));
    }
    let hidden = mapping
        .hidden
        .iter()
        .map(|p| (p.lower_layer, upper_trace.post[p.upper_layer - 1].clone()))
        .collect();
    Ok(GuidanceTargets { hidden, output: upper_trace.logits.clone() })
}

/// Guidance loss value with its per-entry breakdown.
#[derive(Debug, Clone)]
pub struct GuidanceLoss {
    pub total: f64,
    /// `(lower layer index, contribution)`; the output entry uses layer
    /// index = lower depth.
    pub per_entry: Vec<(usize, f64)>,
}

/// Sum of per-mapped-entry MSE terms: each guided lower hidden layer is
/// compared on its first `width_overlap` units, the output on full logits.
pub fn guidance_loss(
    lower_trace: &ActivationTrace,
    targets: &GuidanceTargets,
    mapping: &GuidanceMapping,
) -> Result<GuidanceLoss> {
    Ok(guidance_head(lower_trace, targets, mapping)?.0)
}

/// Guidance loss together with the [`BackwardSignal`] that injects each MSE
/// term's gradient at its mapped layer.
pub fn guidance_head(
    lower_trace: &ActivationTrace,
    targets: &GuidanceTargets,
    mapping: &GuidanceMapping,
) -> Result<(GuidanceLoss, BackwardSignal)> {
    if lower_trace.depth() != mapping.lower_depth {
        return Err(Error::Shape(format!(
            "trace depth {} does not match mapping's lower depth {}",
            lower_trace.depth(),
            mapping.lower_depth
        )));
    }
    if targets.hidden.len() != mapping.hidden.len() {
        return Err(Error::Shape("targets do not match mapping".into()));
    }

    let mut total = 0.0;
    let mut per_entry = Vec::with_capacity(mapping.hidden.len() + 1);
    let mut hidden_grads: Vec<Option<Array2<f64>>> = vec![None; lower_trace.depth() - 1];

    for (pair, (lower_layer, target)) in mapping.hidden.iter().zip(&targets.hidden) {
        debug_assert_eq!(*lower_layer, pair.lower_layer);
        let act = &lower_trace.post[pair.lower_layer - 1];
        if target.nrows() != act.nrows() || target.ncols() != pair.width_overlap {
            return Err(Error::Shape(format!(
                "target for lower layer {} has shape {:?}, expected ({}, {})",
                pair.lower_layer,
                target.shape(),
                act.nrows(),
                pair.width_overlap
            )));
        }
        let slice = act.slice(s![.., 0..pair.width_overlap]);
        let (loss, grad) = mse(slice, target.view())?;
        total += loss;
        per_entry.push((pair.lower_layer, loss));
        let mut full = Array2::zeros(act.raw_dim());
        full.slice_mut(s![.., 0..pair.width_overlap]).assign(&grad);
        hidden_grads[pair.lower_layer - 1] = Some(full);
    }

    let (out_loss, out_grad) = mse(lower_trace.logits.view(), targets.output.view())?;
    total += out_loss;
    per_entry.push((mapping.lower_depth, out_loss));

    Ok((GuidanceLoss { total, per_entry }, BackwardSignal { logit_grad: out_grad, hidden_grads }))
}

/// Loss-only evaluation for a candidate lower network against fixed targets;
/// this is what the finite-difference oracle perturbs.
pub fn guidance_loss_for(
    lower: &Network,
    batch: &Array2<f64>,
    targets: &GuidanceTargets,
    mapping: &GuidanceMapping,
) -> Result<f64> {
    let trace = lower.forward(batch)?;
    Ok(guidance_loss(&trace, targets, mapping)?.total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck;
    use crate::nn::backward;
    use ndarray::array;

    #[test]
    fn appendix_style_floor_tables() {
        let stack =
            FloorStack::build(8, 256, 3, 784, 10, Activation::Sigmoid, 0).unwrap();
        let specs = stack.specs_bottom_up();
        assert_eq!(
            specs.iter().map(|s| (s.depth, s.width)).collect::<Vec<_>>(),
            vec![(8, 256), (4, 128), (2, 64)]
        );

        let stack = FloorStack::build(8, 512, 3, 3072, 100, Activation::Relu, 0).unwrap();
        let specs = stack.specs_bottom_up();
        assert_eq!(
            specs.iter().map(|s| (s.depth, s.width)).collect::<Vec<_>>(),
            vec![(8, 512), (4, 256), (2, 128)]
        );
    }

    #[test]
    fn single_floor_equals_plain_baseline() {
        let stack = FloorStack::build(8, 256, 1, 20, 4, Activation::Relu, 0).unwrap();
        assert_eq!(stack.floor_count(), 1);
        let f = stack.get(1);
        assert_eq!((f.spec.depth, f.spec.width), (8, 256));
        assert_eq!(f.net.depth(), 8);
        assert_eq!(f.net.hidden_width(), 256);
    }

    #[test]
    fn too_many_floors_is_a_config_error() {
        assert!(matches!(
            FloorStack::build(8, 256, 5, 10, 4, Activation::Relu, 0),
            Err(crate::Error::Config(_))
        ));
        assert!(matches!(
            FloorStack::build(16, 4, 4, 10, 4, Activation::Relu, 0),
            Err(crate::Error::Config(_))
        ));
    }

    #[test]
    fn floor_formula_exactness() {
        for base_depth in [4usize, 8, 16, 9, 13] {
            for base_width in [16usize, 256, 300] {
                for count in 1..=3 {
                    if base_depth < (1 << (count - 1)) || base_width < (1 << (count - 1)) {
                        continue;
                    }
                    let stack = FloorStack::build(
                        base_depth,
                        base_width,
                        count,
                        7,
                        3,
                        Activation::Tanh,
                        1,
                    )
                    .unwrap();
                    for f in 1..=count {
                        let spec = stack.get(f).spec;
                        assert_eq!(spec.depth, base_depth / (1 << (f - 1)));
                        assert_eq!(spec.width, base_width / (1 << (f - 1)));
                        assert_eq!(stack.get(f).net.depth(), spec.depth);
                    }
                }
            }
        }
    }

    #[test]
    fn mapping_follows_ceiling_rule() {
        let up = FloorSpec { floor_index: 2, depth: 4, width: 128 };
        let low = FloorSpec { floor_index: 1, depth: 8, width: 256 };
        let m = map_layers(&up, &low).unwrap();
        assert_eq!(
            m.hidden.iter().map(|p| (p.upper_layer, p.lower_layer)).collect::<Vec<_>>(),
            vec![(1, 2), (2, 4), (3, 6)]
        );
        assert!(m.hidden.iter().all(|p| p.width_overlap == 128));

        let up = FloorSpec { floor_index: 2, depth: 2, width: 8 };
        let low = FloorSpec { floor_index: 1, depth: 4, width: 16 };
        let m = map_layers(&up, &low).unwrap();
        assert_eq!(
            m.hidden.iter().map(|p| (p.upper_layer, p.lower_layer)).collect::<Vec<_>>(),
            vec![(1, 2)]
        );
    }

    #[test]
    fn identity_mapping_for_equal_specs() {
        let spec = FloorSpec { floor_index: 1, depth: 5, width: 12 };
        let m = map_layers(&spec, &spec).unwrap();
        assert_eq!(m.hidden.len(), 4);
        for p in &m.hidden {
            assert_eq!(p.upper_layer, p.lower_layer);
            assert_eq!(p.width_overlap, 12);
        }
    }

    #[test]
    fn mapping_is_injective_and_order_preserving() {
        for (du, dl) in [(2usize, 8usize), (3, 7), (4, 8), (5, 16), (8, 16)] {
            let up = FloorSpec { floor_index: 2, depth: du, width: 4 };
            let low = FloorSpec { floor_index: 1, depth: dl, width: 8 };
            let m = map_layers(&up, &low).unwrap();
            assert_eq!(m.hidden.len(), du - 1);
            for w in m.hidden.windows(2) {
                assert!(w[1].lower_layer > w[0].lower_layer, "not strictly increasing");
            }
            // mapped indices stay within the lower floor's hidden layers
            assert!(m.hidden.iter().all(|p| p.lower_layer <= dl - 1));
        }
    }

    #[test]
    fn depth_one_upper_maps_output_only() {
        let up = FloorSpec { floor_index: 4, depth: 1, width: 32 };
        let low = FloorSpec { floor_index: 3, depth: 2, width: 64 };
        let m = map_layers(&up, &low).unwrap();
        assert!(m.hidden.is_empty());
    }

    #[test]
    fn invalid_mapping_preconditions() {
        let up = FloorSpec { floor_index: 2, depth: 8, width: 4 };
        let low = FloorSpec { floor_index: 1, depth: 4, width: 8 };
        assert!(map_layers(&up, &low).is_err());
        let up = FloorSpec { floor_index: 2, depth: 2, width: 64 };
        let low = FloorSpec { floor_index: 1, depth: 4, width: 32 };
        assert!(map_layers(&up, &low).is_err());
    }

    #[test]
    fn extract_targets_identity_and_zero_net_cases() {
        let net = Network::seeded(6, 3, 4, 8, Activation::Sigmoid, 2).unwrap();
        let x = Array2::from_shape_fn((5, 6), |(i, j)| ((i + 2 * j) as f64 * 0.11).sin());
        let trace = net.forward(&x).unwrap();
        let spec = FloorSpec { floor_index: 1, depth: 4, width: 8 };
        let m = map_layers(&spec, &spec).unwrap();
        let t = extract_targets(&trace, &m).unwrap();
        for (pair, (_, target)) in m.hidden.iter().zip(&t.hidden) {
            assert_eq!(target, &trace.post[pair.upper_layer - 1]);
        }
        assert_eq!(t.output, trace.logits);

        // zero-weight sigmoid net: hidden targets 0.5, output targets 0
        let zero = Network::from_layers(
            vec![
                crate::nn::LayerParams {
                    weights: Array2::zeros((8, 6)),
                    bias: ndarray::Array1::zeros(8),
                },
                crate::nn::LayerParams {
                    weights: Array2::zeros((3, 8)),
                    bias: ndarray::Array1::zeros(3),
                },
            ],
            Activation::Sigmoid,
        )
        .unwrap();
        let trace = zero.forward(&x).unwrap();
        let spec2 = FloorSpec { floor_index: 2, depth: 2, width: 8 };
        let lower = FloorSpec { floor_index: 1, depth: 4, width: 8 };
        let m = map_layers(&spec2, &lower).unwrap();
        let t = extract_targets(&trace, &m).unwrap();
        assert!(t.hidden[0].1.iter().all(|&v| v == 0.5));
        assert!(t.output.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn targets_are_detached_from_lower_network() {
        let upper = Network::seeded(4, 2, 2, 4, Activation::Sigmoid, 7).unwrap();
        let mut lower = Network::seeded(4, 2, 4, 8, Activation::Sigmoid, 8).unwrap();
        let x = Array2::from_shape_fn((3, 4), |(i, j)| (i as f64 - j as f64) * 0.2);
        let m = map_layers(
            &FloorSpec { floor_index: 2, depth: 2, width: 4 },
            &FloorSpec { floor_index: 1, depth: 4, width: 8 },
        )
        .unwrap();
        let t = extract_targets(&upper.forward(&x).unwrap(), &m).unwrap();
        let snapshot = t.output.clone();
        lower.layers_mut()[0].weights[[0, 0]] += 10.0;
        assert_eq!(t.output, snapshot);
    }

    #[test]
    fn guidance_loss_zero_iff_slices_match() {
        let upper = Network::seeded(5, 3, 3, 4, Activation::Tanh, 3).unwrap();
        let x = Array2::from_shape_fn((4, 5), |(i, j)| ((i * j) as f64 * 0.17).cos());
        let m = map_layers(
            &FloorSpec { floor_index: 2, depth: 3, width: 4 },
            &FloorSpec { floor_index: 1, depth: 3, width: 4 },
        )
        .unwrap();
        let trace = upper.forward(&x).unwrap();
        let t = extract_targets(&trace, &m).unwrap();
        let loss = guidance_loss(&trace, &t, &m).unwrap();
        assert!(loss.total < 1e-12);
        assert!(loss.per_entry.iter().all(|(_, v)| *v < 1e-12));
    }

    #[test]
    fn single_entry_unit_contribution() {
        // one mapped hidden layer with slice [1,0] against target [0,1]
        // contributes exactly 1.0
        let pred = array![[1.0, 0.0]];
        let target = array![[0.0, 1.0]];
        let (loss, _) = mse(pred.view(), target.view()).unwrap();
        assert!((loss - 1.0).abs() < 1e-15);
    }

    #[test]
    fn guidance_gradients_match_finite_differences() {
        let upper = Network::seeded(6, 3, 2, 5, Activation::Sigmoid, 21).unwrap();
        let lower = Network::seeded(6, 3, 4, 10, Activation::Sigmoid, 22).unwrap();
        let x = Array2::from_shape_fn((3, 6), |(i, j)| ((i * 5 + j) as f64 * 0.23).sin());
        let m = map_layers(
            &FloorSpec { floor_index: 2, depth: 2, width: 5 },
            &FloorSpec { floor_index: 1, depth: 4, width: 10 },
        )
        .unwrap();
        let targets = extract_targets(&upper.forward(&x).unwrap(), &m).unwrap();

        let trace = lower.forward(&x).unwrap();
        let (_, signal) = guidance_head(&trace, &targets, &m).unwrap();
        let analytic = backward(&lower, &trace, &signal).unwrap();

        let check = gradcheck::check_against_fd(
            &lower,
            &analytic,
            |n| guidance_loss_for(n, &x, &targets, &m),
            None,
            1e-5,
        )
        .unwrap();
        assert!(check.rel_err < 1e-7, "vector relative error {}", check.rel_err);
    }

    #[test]
    fn guidance_at_own_trace_gives_zero_gradient() {
        let net = Network::seeded(5, 2, 3, 6, Activation::Tanh, 31).unwrap();
        let x = Array2::from_shape_fn((2, 5), |(i, j)| (i + j) as f64 * 0.1);
        let spec = FloorSpec { floor_index: 1, depth: 3, width: 6 };
        let m = map_layers(&spec, &spec).unwrap();
        let trace = net.forward(&x).unwrap();
        let targets = extract_targets(&trace, &m).unwrap();
        let (loss, signal) = guidance_head(&trace, &targets, &m).unwrap();
        assert!(loss.total < 1e-15);
        let grads = backward(&net, &trace, &signal).unwrap();
        assert!(grads.is_all_zero());
    }
}
