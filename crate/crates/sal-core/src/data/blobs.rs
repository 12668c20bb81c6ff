//! Synthetic Gaussian-cluster datasets with an analytically known Bayes
//! accuracy, used as training oracles. For two unit-variance classes whose
//! centers sit `s` apart, the Bayes accuracy is `Φ(s/2)`.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::Dataset;
use crate::rng;
use crate::{Error, Result};

/// Gaussian blobs: `classes` unit-covariance clusters whose centers are
/// pairwise exactly `separation` apart, in a seeded random orientation.
/// Requires `dim >= classes` so equidistant centers exist.
pub fn synth_blobs(
    samples_per_class: usize,
    dim: usize,
    classes: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset> {
    if separation <= 0.0 {
        return Err(Error::Config(format!("separation {separation} must be > 0")));
    }
    if classes < 2 {
        return Err(Error::Config("need at least two classes".into()));
    }
    if dim < classes {
        return Err(Error::Config(format!(
            "dim {dim} < classes {classes}; equidistant centers need dim >= classes"
        )));
    }
    if samples_per_class == 0 {
        return Err(Error::Config("samples_per_class must be >= 1".into()));
    }

    let mut centers_rng = rng::stream(seed, "blob-centers");
    let basis = random_orthonormal(dim, classes, &mut centers_rng);
    // scaled standard simplex: ‖(s/√2)(eᵢ − eⱼ)‖ = s for i ≠ j
    let scale = separation / std::f64::consts::SQRT_2;
    let centers: Vec<Array1<f64>> = basis.into_iter().map(|b| b * scale).collect();

    let normal = Normal::new(0.0, 1.0).expect("valid parameters");
    let mut noise_rng = rng::stream(seed, "blob-noise");
    let m = samples_per_class * classes;
    let mut inputs = Array2::zeros((m, dim));
    let mut labels = Vec::with_capacity(m);
    for c in 0..classes {
        for s in 0..samples_per_class {
            let row = c * samples_per_class + s;
            for d in 0..dim {
                inputs[[row, d]] = centers[c][d] + normal.sample(&mut noise_rng);
            }
            labels.push(c);
        }
    }
    Dataset::new(inputs, labels, classes, "blobs")
}

/// Bayes accuracy of the two-class unit-variance problem at center distance
/// `separation`: `Φ(separation / 2)`.
pub fn two_class_bayes_accuracy(separation: f64) -> f64 {
    standard_normal_cdf(separation / 2.0)
}

fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Abramowitz–Stegun 7.1.26 rational approximation, |error| < 1.5e-7.
fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

/// `count` orthonormal vectors in `dim` dimensions from seeded Gaussian
/// draws and Gram–Schmidt.
fn random_orthonormal(dim: usize, count: usize, rng: &mut impl Rng) -> Vec<Array1<f64>> {
    let normal = Normal::new(0.0, 1.0).expect("valid parameters");
    let mut out: Vec<Array1<f64>> = Vec::with_capacity(count);
    while out.len() < count {
        let mut v = Array1::from_shape_fn(dim, |_| normal.sample(rng));
        for u in &out {
            let proj = v.dot(u);
            v = v - u.mapv(|x| x * proj);
        }
        let norm = v.dot(&v).sqrt();
        if norm > 1e-8 {
            out.push(v / norm);
        }
    }
    out
}
