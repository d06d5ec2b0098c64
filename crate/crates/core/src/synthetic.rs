//! Gaussian-blob multi-view generator for tests and benchmarks.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, MultiViewDataset, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub num_classes: usize,
    pub per_class: usize,
    /// Feature dimension of every view; its length is the number of views.
    pub dims: Vec<usize>,
    /// Expected distance between two class means within a view.
    pub separation: f64,
    /// Standard deviation of the isotropic within-class noise.
    pub noise: f64,
    /// Per-view multipliers on `noise`; empty means 1 for every view.
    pub view_noise: Vec<f64>,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            num_classes: 6,
            per_class: 100,
            dims: alloc::vec![20, 30, 40],
            separation: 6.0,
            noise: 1.0,
            view_noise: Vec::new(),
            seed: 0,
        }
    }
}

/// Draws a dataset in which every class is an isotropic Gaussian blob in
/// every view. Class means are drawn independently per view, so the class
/// identity is the only structure the views share. Sample order is shuffled
/// and the first half of the classes become known.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<MultiViewDataset> {
    if spec.num_classes < 2 || spec.per_class == 0 || spec.dims.is_empty() {
        return Err(Error::InvalidConfig(
            "synthetic data needs >= 2 classes, >= 1 sample per class and >= 1 view".into(),
        ));
    }
    if spec.dims.contains(&0) {
        return Err(Error::InvalidConfig("view dimensions must be positive".into()));
    }
    if !(spec.separation >= 0.0) || !(spec.noise >= 0.0) {
        return Err(Error::InvalidConfig("separation and noise must be non-negative".into()));
    }
    if !spec.view_noise.is_empty() && spec.view_noise.len() != spec.dims.len() {
        return Err(Error::DimensionMismatch {
            expected: spec.dims.len(),
            found: spec.view_noise.len(),
            what: "per-view noise multipliers".into(),
        });
    }
    if spec.view_noise.iter().any(|&m| !(m >= 0.0)) {
        return Err(Error::InvalidConfig("noise multipliers must be non-negative".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let k = spec.num_classes;
    let n = k * spec.per_class;

    let mut labels: Vec<usize> = (0..n).map(|i| i / spec.per_class).collect();
    labels.shuffle(&mut rng);

    let gaussian = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
    let views = spec
        .dims
        .iter()
        .enumerate()
        .map(|(v, &d)| {
            let noise = spec.noise * spec.view_noise.get(v).copied().unwrap_or(1.0);
            // E‖μ_a − μ_b‖² = 2 d s² = separation²
            let scale = spec.separation / libm::sqrt(2.0 * d as f64);
            let means: Vec<DVector<f64>> = (0..k)
                .map(|_| DVector::from_fn(d, |_, _| scale * gaussian(&mut rng)))
                .collect();
            let mut x = DMatrix::zeros(d, n);
            for (j, &c) in labels.iter().enumerate() {
                for i in 0..d {
                    x[(i, j)] = means[c][i] + noise * gaussian(&mut rng);
                }
            }
            x
        })
        .collect();

    MultiViewDataset::with_default_split(views, labels, k)
}
