//! Training diagnostics: per-layer gradient-ratio profiles and standard
//! classification metrics.
//!
//! The gradient ratio of layer `l` is the Frobenius norm of its weight
//! gradient divided by the output layer's, from a single backward pass on a
//! fixed probe batch. Ratios near zero toward the early layers are the
//! signature of vanishing backward signal; the output layer is 1 by
//! definition. Biases are excluded from the norms.

use ndarray::Array2;
use serde::Serialize;

use crate::floors::{guidance_head, GuidanceMapping, GuidanceTargets};
use crate::nn::{backward, loss, BackwardSignal, Network};
use crate::{Error, Result};

/// Loss head used for a gradient probe.
pub enum ProfileHead<'a> {
    /// Cross-entropy against one-hot targets.
    CrossEntropy { targets: &'a Array2<f64> },
    /// Multi-layer MSE guidance against stored upper-floor values.
    Guidance { targets: &'a GuidanceTargets, mapping: &'a GuidanceMapping },
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerRatio {
    /// 1-based layer index; the last entry is the output layer.
    pub layer_index: usize,
    pub ratio: f64,
    /// `log10(ratio)`; absent when the ratio is exactly zero.
    pub log10_ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientRatioProfile {
    pub layers: Vec<LayerRatio>,
    /// Training unit (step or epoch) the probe ran after.
    pub capture_unit: u32,
    /// `capture_unit / total_units`, when the schedule is known.
    pub capture_fraction: Option<f64>,
}

impl GradientRatioProfile {
    pub fn ratio_at(&self, layer_index: usize) -> f64 {
        self.layers[layer_index - 1].ratio
    }
}

/// One backward pass on `batch` under `head`, reduced to per-layer
/// Frobenius-norm ratios relative to the output layer.
pub fn gradient_ratio_profile(
    net: &Network,
    batch: &Array2<f64>,
    head: ProfileHead<'_>,
    capture_unit: u32,
) -> Result<GradientRatioProfile> {
    let trace = net.forward(batch)?;
    let signal: BackwardSignal = match head {
        ProfileHead::CrossEntropy { targets } => {
            let (_, grad) = loss::ce_head(&trace.logits, targets)?;
            BackwardSignal::output_only(grad, net.depth() - 1)
        }
        ProfileHead::Guidance { targets, mapping } => guidance_head(&trace, targets, mapping)?.1,
    };
    let grads = backward(net, &trace, &signal)?;
    let out_norm = grads.weight_frobenius(net.depth() - 1);
    if out_norm == 0.0 {
        return Err(Error::DegenerateProfile(
            "output-layer weight gradient is zero; ratios undefined".into(),
        ));
    }
    let layers = (0..net.depth())
        .map(|l| {
            let ratio = grads.weight_frobenius(l) / out_norm;
            LayerRatio {
                layer_index: l + 1,
                ratio,
                log10_ratio: (ratio > 0.0).then(|| ratio.log10()),
            }
        })
        .collect();
    Ok(GradientRatioProfile { layers, capture_unit, capture_fraction: None })
}

/// Unit at which a midpoint probe runs: `⌊total/2⌋`. The total comes either
/// from a finished reference run or from configuration.
pub fn midpoint_capture(total_units: u32) -> Result<u32> {
    if total_units < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 training units to take a midpoint, got {total_units}"
        )));
    }
    Ok(total_units / 2)
}

/// Macro-averaged one-vs-rest classification metrics.
#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    /// Macro recall.
    pub sensitivity: f64,
    /// Macro one-vs-rest true-negative rate.
    pub specificity: f64,
    /// Macro one-vs-rest AUROC via mid-rank Mann–Whitney.
    pub auroc: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    /// Classes with no support, excluded from the macro averages.
    pub absent_classes: Vec<usize>,
}

/// Compute the metric set from per-class scores (`m × n`) and true labels.
/// Predictions are the per-row argmax.
pub fn classification_metrics(scores: &Array2<f64>, labels: &[usize]) -> Result<MetricReport> {
    let m = scores.nrows();
    let n = scores.ncols();
    if m == 0 {
        return Err(Error::Data("no samples".into()));
    }
    if labels.len() != m {
        return Err(Error::Shape(format!("{m} score rows vs {} labels", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n) {
        return Err(Error::Data(format!("label {bad} out of range [0, {n})")));
    }

    let mut confusion = vec![vec![0usize; n]; n];
    for (row, &truth) in scores.outer_iter().zip(labels.iter()) {
        let pred = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .expect("n >= 1");
        confusion[truth][pred] += 1;
    }
    let correct: usize = (0..n).map(|c| confusion[c][c]).sum();
    let accuracy = correct as f64 / m as f64;

    let mut absent = Vec::new();
    let mut f1_sum = 0.0;
    let mut recall_sum = 0.0;
    let mut spec_sum = 0.0;
    let mut auroc_sum = 0.0;
    let mut present = 0usize;
    for c in 0..n {
        let support: usize = confusion[c].iter().sum();
        if support == 0 {
            absent.push(c);
            continue;
        }
        present += 1;
        let tp = confusion[c][c];
        let fn_ = support - tp;
        let fp: usize = (0..n).filter(|&t| t != c).map(|t| confusion[t][c]).sum();
        let tn = m - tp - fn_ - fp;
        let precision = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
        let recall = tp as f64 / support as f64;
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        let specificity = if tn + fp > 0 { tn as f64 / (tn + fp) as f64 } else { 0.0 };
        f1_sum += f1;
        recall_sum += recall;
        spec_sum += specificity;
        auroc_sum += auroc_one_vs_rest(scores, labels, c);
    }
    if present == 0 {
        return Err(Error::Data("no class has support".into()));
    }
    let k = present as f64;
    Ok(MetricReport {
        accuracy,
        macro_f1: f1_sum / k,
        sensitivity: recall_sum / k,
        specificity: spec_sum / k,
        auroc: auroc_sum / k,
        confusion,
        absent_classes: absent,
    })
}

/// Mann–Whitney AUROC for class `c` with mid-ranks for ties. With every
/// sample positive (or negative) the value is conventionally 0.5, but such
/// classes never reach here in one-vs-rest over present classes with m >= 2.
fn auroc_one_vs_rest(scores: &Array2<f64>, labels: &[usize], c: usize) -> f64 {
    let m = scores.nrows();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| scores[[a, c]].partial_cmp(&scores[[b, c]]).unwrap());

    let mut ranks = vec![0.0f64; m];
    let mut i = 0;
    while i < m {
        let mut j = i;
        while j + 1 < m && scores[[order[j + 1], c]] == scores[[order[i], c]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mid;
        }
        i = j + 1;
    }

    let n_pos = labels.iter().filter(|&&l| l == c).count();
    let n_neg = m - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return 0.5;
    }
    let rank_sum: f64 =
        labels.iter().enumerate().filter(|(_, &l)| l == c).map(|(i, _)| ranks[i]).sum();
    (rank_sum - n_pos as f64 * (n_pos as f64 + 1.0) / 2.0) / (n_pos as f64 * n_neg as f64)
}
