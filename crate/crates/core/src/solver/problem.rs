use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::dataset::normalize_features;
use crate::{Error, MultiViewDataset, Result, SolverConfig};

/// The solver's view of a dataset: normalized views with the labeled
/// columns first, the ground-truth row of every labeled column, and the
/// mapping back to dataset sample indices.
///
/// One-hot rows `0..k_known` are the known classes and `k_known..k` the
/// novel ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    views: Vec<DMatrix<f64>>,
    n_labeled: usize,
    k: usize,
    k_known: usize,
    truth_rows: Vec<usize>,
    label_counts: Vec<f64>,
    sample_index: Vec<usize>,
    row_offset: usize,
}

impl Problem {
    /// Normalizes `ds` as configured and orders the columns as
    /// `[labeled, unlabeled]`. With `ablate_labeled` the labeled samples and
    /// known-class rows are dropped entirely, leaving a `k_u`-cluster problem.
    pub fn new(ds: &MultiViewDataset, cfg: &SolverConfig) -> Result<Self> {
        let normalized = normalize_features(ds, cfg.normalize);
        let k_l = ds.known_classes().len();
        let k_u = ds.novel_classes().len();

        let (order, truth_rows, k, k_known, row_offset): (Vec<usize>, Vec<usize>, _, _, _) = if cfg.ablate_labeled {
            (ds.unlabeled_indices().to_vec(), Vec::new(), k_u, 0, k_l)
        } else {
            let mut order = ds.labeled_indices().to_vec();
            order.extend_from_slice(ds.unlabeled_indices());
            let truth = ds
                .labeled_indices()
                .iter()
                .map(|&i| ds.row_of_class(ds.labels()[i]))
                .collect();
            (order, truth, k_l + k_u, k_l, 0)
        };

        let views = normalized
            .views()
            .iter()
            .map(|v| DMatrix::from_fn(v.dim(), order.len(), |i, j| v.data()[(i, order[j])]))
            .collect();
        let mut problem = Problem::from_parts(views, truth_rows, k, k_known)?;
        problem.sample_index = order;
        problem.row_offset = row_offset;
        Ok(problem)
    }

    /// Builds a problem directly from feature-major views whose first
    /// `truth_rows.len()` columns are labeled with the given one-hot rows
    /// (each below `k_known`).
    pub fn from_parts(views: Vec<DMatrix<f64>>, truth_rows: Vec<usize>, k: usize, k_known: usize) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::EmptyInput("problem needs at least one view"));
        }
        if k == 0 || k_known > k {
            return Err(Error::InvalidSplit("need 0 <= k_known <= k and k >= 1".into()));
        }
        let n = views[0].ncols();
        for (v, x) in views.iter().enumerate() {
            if x.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: x.ncols(),
                    what: alloc::format!("sample count of view {v}"),
                });
            }
            if x.nrows() < k {
                return Err(Error::RankTooLarge {
                    view: v,
                    dim: x.nrows(),
                    rank: k,
                });
            }
        }
        if truth_rows.len() > n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: truth_rows.len(),
                what: "labeled column count".into(),
            });
        }
        let mut label_counts = vec![0.0; k];
        for (i, &r) in truth_rows.iter().enumerate() {
            if r >= k_known {
                return Err(Error::LabelOutOfRange {
                    sample: i,
                    label: r,
                    num_classes: k_known,
                });
            }
            label_counts[r] += 1.0;
        }
        Ok(Problem {
            n_labeled: truth_rows.len(),
            sample_index: (0..n).collect(),
            views,
            k,
            k_known,
            truth_rows,
            label_counts,
            row_offset: 0,
        })
    }

    pub fn views(&self) -> &[DMatrix<f64>] {
        &self.views
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    pub fn num_samples(&self) -> usize {
        self.views[0].ncols()
    }

    pub fn num_labeled(&self) -> usize {
        self.n_labeled
    }

    pub fn num_unlabeled(&self) -> usize {
        self.num_samples() - self.n_labeled
    }

    /// Factorization rank, `k_l + k_u` (or `k_u` with the labeled set ablated).
    pub fn rank(&self) -> usize {
        self.k
    }

    pub fn num_known_rows(&self) -> usize {
        self.k_known
    }

    /// Ground-truth row of every labeled column.
    pub fn truth_rows(&self) -> &[usize] {
        &self.truth_rows
    }

    /// `t_c`: number of labeled columns whose ground truth is row `c`.
    pub fn label_counts(&self) -> &[f64] {
        &self.label_counts
    }

    /// Dataset sample index of every column.
    pub fn sample_index(&self) -> &[usize] {
        &self.sample_index
    }

    /// Converts a row of this problem to the row of the full `k`-class
    /// one-hot layout.
    pub fn raw_row(&self, row: usize) -> usize {
        row + self.row_offset
    }
}
