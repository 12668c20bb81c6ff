//! Dataset ingestion, synthetic generation, stratified subsetting/splitting,
//! and batching. Datasets are immutable after construction.

mod batches;
mod blobs;
mod idx;

pub use batches::batch_plan;
pub use blobs::{synth_blobs, two_class_bayes_accuracy};
pub use idx::{idx_image_bytes, idx_label_bytes, load_idx, parse_idx, write_idx};

use ndarray::Array2;
use rand::seq::SliceRandom;

use crate::rng;
use crate::{Error, Result};

/// A labelled classification dataset: `m × in_dim` inputs with class
/// indices in `[0, n_classes)`.
#[derive(Debug, Clone)]
pub struct Dataset {
    inputs: Array2<f64>,
    labels: Vec<usize>,
    n_classes: usize,
    provenance: String,
}

impl Dataset {
    pub fn new(
        inputs: Array2<f64>,
        labels: Vec<usize>,
        n_classes: usize,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if inputs.nrows() == 0 {
            return Err(Error::Data("dataset must contain at least one sample".into()));
        }
        if inputs.nrows() != labels.len() {
            return Err(Error::Data(format!(
                "{} input rows vs {} labels",
                inputs.nrows(),
                labels.len()
            )));
        }
        if n_classes == 0 {
            return Err(Error::Data("class count must be >= 1".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::Data(format!("label {bad} out of range [0, {n_classes})")));
        }
        if inputs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite input values".into()));
        }
        Ok(Dataset { inputs, labels, n_classes, provenance: provenance.into() })
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn in_dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn inputs(&self) -> &Array2<f64> {
        &self.inputs
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Rows with the given indices, plus one-hot targets.
    pub fn gather(&self, indices: &[usize]) -> (Array2<f64>, Array2<f64>) {
        let x = self.inputs.select(ndarray::Axis(0), indices);
        let mut y = Array2::zeros((indices.len(), self.n_classes));
        for (row, &i) in indices.iter().enumerate() {
            y[[row, self.labels[i]]] = 1.0;
        }
        (x, y)
    }

    /// New dataset from a subset of rows, preserving class count and
    /// provenance.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let inputs = self.inputs.select(ndarray::Axis(0), indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Dataset::new(inputs, labels, self.n_classes, self.provenance.clone())
    }

    fn indices_by_class(&self) -> Vec<Vec<usize>> {
        let mut per_class = vec![Vec::new(); self.n_classes];
        for (i, &l) in self.labels.iter().enumerate() {
            per_class[l].push(i);
        }
        per_class
    }
}

/// Three-way split fractions; must be positive and sum to 1.
#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, val: f64, test: f64, stratified: bool, seed: u64) -> Result<Self> {
        if train <= 0.0 || val <= 0.0 || test <= 0.0 {
            return Err(Error::Config("split fractions must be positive".into()));
        }
        if ((train + val + test) - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split fractions sum to {}, expected 1",
                train + val + test
            )));
        }
        Ok(SplitSpec { train, val, test, stratified, seed })
    }
}

/// Result of [`subsample`]; `bumped_classes` lists classes whose proportional
/// share rounded to zero and were kept with one sample instead.
#[derive(Debug)]
pub struct Subsample {
    pub dataset: Dataset,
    pub bumped_classes: Vec<usize>,
}

/// Stratified sampling without replacement.
///
/// Per-class counts come from largest-remainder apportionment of the global
/// target `round(m·ratio)`, so each class lands within one sample of its
/// proportional share. Selected indices are returned in ascending order;
/// `ratio = 1` reproduces the dataset identically.
pub fn subsample(ds: &Dataset, ratio: f64, stratified: bool, seed: u64) -> Result<Subsample> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::Config(format!("subset ratio {ratio} outside (0, 1]")));
    }
    let m = ds.len();
    let target = ((m as f64 * ratio).round() as usize).clamp(1, m);

    let mut chosen: Vec<usize>;
    let mut bumped = Vec::new();
    if stratified {
        let per_class = ds.indices_by_class();
        let quotas: Vec<f64> = per_class.iter().map(|c| c.len() as f64 * ratio).collect();
        let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
        let mut leftover = target.saturating_sub(counts.iter().sum::<usize>());
        // distribute by largest fractional remainder, class index breaking ties
        let mut order: Vec<usize> = (0..ds.n_classes()).collect();
        order.sort_by(|&a, &b| {
            let ra = quotas[a] - quotas[a].floor();
            let rb = quotas[b] - quotas[b].floor();
            rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
        });
        for &c in order.iter().cycle().take(ds.n_classes().max(leftover)) {
            if leftover == 0 {
                break;
            }
            if counts[c] < per_class[c].len() {
                counts[c] += 1;
                leftover -= 1;
            }
        }
        for c in 0..ds.n_classes() {
            if counts[c] == 0 && !per_class[c].is_empty() {
                counts[c] = 1;
                bumped.push(c);
            }
        }
        chosen = Vec::with_capacity(counts.iter().sum());
        for (c, idx) in per_class.iter().enumerate() {
            let mut pool = idx.clone();
            pool.shuffle(&mut rng::stream_indexed(seed, "subsample", c as u64));
            chosen.extend(pool.into_iter().take(counts[c]));
        }
    } else {
        let mut pool: Vec<usize> = (0..m).collect();
        pool.shuffle(&mut rng::stream(seed, "subsample-uniform"));
        chosen = pool.into_iter().take(target).collect();
    }
    chosen.sort_unstable();
    Ok(Subsample { dataset: ds.subset(&chosen)?, bumped_classes: bumped })
}

/// Disjoint, exhaustive train/val/test partition; see [`partition`].
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    let mut parts =
        partition(ds, &[spec.train, spec.val, spec.test], spec.stratified, spec.seed)?.into_iter();
    Ok((
        parts.next().expect("three parts"),
        parts.next().expect("three parts"),
        parts.next().expect("three parts"),
    ))
}

/// Stratified two-way holdout: `(main, held)` with `held ≈ fraction·m`.
/// Used to carve a validation set out of a train split.
pub fn holdout(ds: &Dataset, fraction: f64, stratified: bool, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("holdout fraction {fraction} outside (0, 1)")));
    }
    let mut parts = partition(ds, &[1.0 - fraction, fraction], stratified, seed)?.into_iter();
    Ok((parts.next().expect("two parts"), parts.next().expect("two parts")))
}

/// Disjoint, exhaustive k-way partition.
///
/// Stratified mode floors each class's share per part and then fills each
/// part's remaining budget toward its global largest-remainder target, so
/// part totals are exact while every class stays within one sample of
/// proportional. Every part receives at least one sample of every class; a
/// class with fewer samples than parts is an error.
pub fn partition(ds: &Dataset, fractions: &[f64], stratified: bool, seed: u64) -> Result<Vec<Dataset>> {
    let k = fractions.len();
    if k < 2 {
        return Err(Error::Config("need at least two partition fractions".into()));
    }
    if fractions.iter().any(|&f| f <= 0.0) {
        return Err(Error::Config("partition fractions must be positive".into()));
    }
    if (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "partition fractions sum to {}, expected 1",
            fractions.iter().sum::<f64>()
        )));
    }
    let m = ds.len();
    let global_targets = apportion(m, fractions);

    let mut parts: Vec<Vec<usize>> = vec![Vec::new(); k];
    if stratified {
        let per_class = ds.indices_by_class();
        for (c, idx) in per_class.iter().enumerate() {
            if !idx.is_empty() && idx.len() < k {
                return Err(Error::Data(format!(
                    "class {c} has {} samples; cannot stratify a {k}-way split",
                    idx.len()
                )));
            }
        }
        let all_bases: Vec<Vec<usize>> = per_class
            .iter()
            .map(|idx| {
                fractions.iter().map(|f| (idx.len() as f64 * f).floor() as usize).collect()
            })
            .collect();
        let mut budgets: Vec<usize> = (0..k)
            .map(|s| {
                let used: usize = all_bases.iter().map(|b| b[s]).sum();
                global_targets[s].saturating_sub(used)
            })
            .collect();
        for (c, idx) in per_class.iter().enumerate() {
            if idx.is_empty() {
                continue;
            }
            let mc = idx.len();
            let quotas: Vec<f64> = fractions.iter().map(|f| mc as f64 * f).collect();
            let mut counts = all_bases[c].clone();
            let mut leftover = mc - counts.iter().sum::<usize>();
            while leftover > 0 {
                let s = (0..k)
                    .filter(|&s| budgets[s] > 0)
                    .max_by(|&a, &b| {
                        let ra = quotas[a] - quotas[a].floor();
                        let rb = quotas[b] - quotas[b].floor();
                        ra.partial_cmp(&rb).unwrap().then(b.cmp(&a))
                    })
                    .expect("leftover total equals budget total");
                counts[s] += 1;
                budgets[s] -= 1;
                leftover -= 1;
            }
            // every part sees every class at least once
            for s in 0..k {
                if counts[s] == 0 {
                    let donor = (0..k).max_by_key(|&d| counts[d]).expect("k >= 2 parts");
                    counts[donor] -= 1;
                    counts[s] += 1;
                }
            }
            let mut pool = idx.clone();
            pool.shuffle(&mut rng::stream_indexed(seed, "split", c as u64));
            let mut cursor = 0;
            for s in 0..k {
                parts[s].extend(&pool[cursor..cursor + counts[s]]);
                cursor += counts[s];
            }
        }
    } else {
        let mut pool: Vec<usize> = (0..m).collect();
        pool.shuffle(&mut rng::stream(seed, "split-uniform"));
        let mut cursor = 0;
        for s in 0..k {
            let take = if s == k - 1 { m - cursor } else { global_targets[s] };
            parts[s].extend(&pool[cursor..cursor + take]);
            cursor += take;
        }
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    parts.into_iter().map(|p| ds.subset(&p)).collect()
}

/// Largest-remainder apportionment of `total` across `fractions`.
fn apportion(total: usize, fractions: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = fractions.iter().map(|f| total as f64 * f).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut leftover = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if leftover == 0 {
            break;
        }
        counts[i] += 1;
        leftover -= 1;
    }
    counts
}

#[cfg(test)]
mod tests;
