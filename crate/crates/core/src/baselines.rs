//! Reference clusterers: Lloyd's k-means with k-means++ seeding, and the
//! feature-concatenation k-means baseline used to initialize the solver.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::normalize_features;
use crate::linalg::stack_columns;
use crate::{Error, MultiViewDataset, Result, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansOptions {
    pub max_iter: usize,
    /// Stop once the relative inertia decrease falls below this.
    pub tol: f64,
    /// Independent seedings; the run with the lowest inertia is returned.
    pub restarts: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions {
            max_iter: 300,
            tol: 1e-8,
            restarts: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// `d × k`, one centroid per column.
    pub centroids: DMatrix<f64>,
    pub assignment: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after every assignment step.
    pub inertia_trace: Vec<f64>,
}

fn sq_dist(points: &DMatrix<f64>, j: usize, centroids: &DMatrix<f64>, c: usize) -> f64 {
    points
        .column(j)
        .iter()
        .zip(centroids.column(c).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// k-means++ seeding: first centre uniform, then each next centre drawn with
/// probability proportional to the squared distance to the nearest centre.
fn seed_plus_plus(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = points.ncols();
    let mut centroids = DMatrix::zeros(points.nrows(), k);
    let first = rng.random_range(0..n);
    centroids.set_column(0, &points.column(first));
    let mut nearest: Vec<f64> = (0..n).map(|j| sq_dist(points, j, &centroids, 0)).collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (j, &w) in nearest.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    pick = j;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centroids.set_column(c, &points.column(pick));
        for (j, slot) in nearest.iter_mut().enumerate() {
            *slot = slot.min(sq_dist(points, j, &centroids, c));
        }
    }
    centroids
}

/// Lloyd's algorithm on the columns of `points`, restarted from fresh
/// k-means++ seedings. Deterministic for a given `seed`; an empty cluster is
/// re-seeded at the point farthest from its current centroid.
pub fn kmeans_fit(points: &DMatrix<f64>, k: usize, seed: u64, opts: KMeansOptions) -> Result<KMeansResult> {
    let n = points.ncols();
    if k == 0 {
        return Err(Error::InvalidConfig("k-means needs k >= 1".into()));
    }
    if k > n {
        return Err(Error::TooManyClusters { k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..opts.restarts.max(1) {
        let run = lloyd(points, k, &mut rng, opts);
        // strict `<` keeps the earliest run on ties
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn lloyd(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng, opts: KMeansOptions) -> KMeansResult {
    let n = points.ncols();
    let mut centroids = seed_plus_plus(points, k, rng);
    let mut assignment = vec![0usize; n];
    let mut dist = vec![0.0f64; n];
    let mut trace = Vec::new();
    let mut iterations = 0;

    loop {
        iterations += 1;
        let mut changed = false;
        for j in 0..n {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let d = sq_dist(points, j, &centroids, c);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            changed |= assignment[j] != best;
            assignment[j] = best;
            dist[j] = best_d;
        }
        let inertia: f64 = dist.iter().sum();
        let previous = trace.last().copied();
        trace.push(inertia);

        let converged = previous
            .map(|p: f64| (p - inertia) <= opts.tol * p.abs().max(f64::MIN_POSITIVE))
            .unwrap_or(false);
        if (!changed && iterations > 1) || converged || iterations >= opts.max_iter {
            break;
        }

        let mut sums = DMatrix::zeros(points.nrows(), k);
        let mut counts = vec![0usize; k];
        for (j, &c) in assignment.iter().enumerate() {
            let mut col = sums.column_mut(c);
            col += points.column(j);
            counts[c] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids.set_column(c, &(sums.column(c) / counts[c] as f64));
            } else {
                let far = (0..n)
                    .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
                    .unwrap();
                centroids.set_column(c, &points.column(far));
                dist[far] = 0.0;
            }
        }
    }

    KMeansResult {
        centroids,
        assignment,
        inertia: *trace.last().unwrap(),
        iterations,
        inertia_trace: trace,
    }
}

/// Normalized, column-concatenated unlabeled features of every view.
pub(crate) fn stacked_unlabeled(ds: &MultiViewDataset, cfg: &SolverConfig) -> DMatrix<f64> {
    let normalized = normalize_features(ds, cfg.normalize);
    let views: Vec<&DMatrix<f64>> = normalized.views().iter().map(|v| v.data()).collect();
    stack_columns(&views, ds.unlabeled_indices())
}

/// Clusters the unlabeled samples into `k_u` groups by k-means on the
/// concatenation of all normalized views. Labeled data is ignored.
pub fn concat_kmeans_ncd(ds: &MultiViewDataset, cfg: &SolverConfig) -> Result<Vec<usize>> {
    let points = stacked_unlabeled(ds, cfg);
    let k_u = ds.novel_classes().len();
    Ok(kmeans_fit(&points, k_u, cfg.seed, KMeansOptions::default())?.assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::clustering_accuracy;
    use crate::synthetic::{generate_synthetic, SyntheticSpec};
    use proptest::prelude::*;

    #[test]
    fn each_point_its_own_cluster() {
        let pts = DMatrix::from_row_slice(2, 3, &[0., 5., 9., 1., -3., 4.]);
        let r = kmeans_fit(&pts, 3, 1, KMeansOptions::default()).unwrap();
        assert_eq!(r.inertia, 0.0);
        let mut a = r.assignment.clone();
        a.sort_unstable();
        assert_eq!(a, vec![0, 1, 2]);
    }

    #[test]
    fn two_pairs() {
        let pts = DMatrix::from_row_slice(2, 4, &[0., 0., 10., 10., 0., 2., 10., 12.]);
        let r = kmeans_fit(&pts, 2, 4, KMeansOptions::default()).unwrap();
        assert_eq!(r.assignment[0], r.assignment[1]);
        assert_eq!(r.assignment[2], r.assignment[3]);
        let a = r.centroids.column(r.assignment[0]);
        let b = r.centroids.column(r.assignment[2]);
        assert_eq!((a[0], a[1]), (0.0, 1.0));
        assert_eq!((b[0], b[1]), (10.0, 11.0));
        assert!((r.inertia - 4.0).abs() < 1e-12);
    }

    #[test]
    fn too_many_clusters() {
        let pts = DMatrix::zeros(2, 3);
        assert_eq!(
            kmeans_fit(&pts, 4, 0, KMeansOptions::default()),
            Err(Error::TooManyClusters { k: 4, n: 3 })
        );
    }

    #[test]
    fn duplicate_points_do_not_break_seeding() {
        let pts = DMatrix::from_element(3, 10, 2.5);
        let r = kmeans_fit(&pts, 3, 9, KMeansOptions::default()).unwrap();
        assert_eq!(r.inertia, 0.0);
    }

    #[test]
    fn baseline_on_separated_data() {
        let spec = SyntheticSpec {
            separation: 10.0,
            noise: 0.5,
            seed: 2,
            ..Default::default()
        };
        let ds = generate_synthetic(&spec).unwrap();
        let cfg = SolverConfig::default();
        let pred = concat_kmeans_ncd(&ds, &cfg).unwrap();
        assert_eq!(pred.len(), ds.unlabeled_indices().len());
        assert!(clustering_accuracy(&pred, &ds.novel_truth()).unwrap() >= 0.95);
        assert_eq!(pred, concat_kmeans_ncd(&ds, &cfg).unwrap());
    }

    #[test]
    fn single_novel_cluster() {
        let x = DMatrix::from_fn(2, 6, |i, j| (i * 7 + j) as f64);
        let ds = MultiViewDataset::new(vec![x], vec![0, 1, 2, 1, 2, 2], 3, vec![0, 1]).unwrap();
        // k_u = 1 after marking two of three classes known.
        let pred = concat_kmeans_ncd(&ds, &SolverConfig::default()).unwrap();
        assert!(pred.iter().all(|&p| p == 0));
        assert_eq!(clustering_accuracy(&pred, &ds.novel_truth()).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn inertia_non_increasing(seed in 0u64..1000, vals in proptest::collection::vec(-5.0f64..5.0, 60)) {
            let pts = DMatrix::from_column_slice(3, 20, &vals);
            let r = kmeans_fit(&pts, 4, seed, KMeansOptions::default()).unwrap();
            for w in r.inertia_trace.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12);
            }
        }
    }
}
