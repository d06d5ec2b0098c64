//! Clustering quality on the novel set: accuracy under the best
//! cluster-to-class matching, normalized mutual information and purity.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Cluster-vs-class co-occurrence counts. Rows are the predicted ids that
/// occur, columns the true ids that occur, both in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    row_ids: Vec<usize>,
    col_ids: Vec<usize>,
    counts: Vec<u64>,
    n: u64,
}

impl ContingencyTable {
    pub fn new(pred: &[usize], truth: &[usize]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::DimensionMismatch {
                expected: truth.len(),
                found: pred.len(),
                what: "prediction length".into(),
            });
        }
        if pred.is_empty() {
            return Err(Error::EmptyInput("clustering metrics need at least one sample"));
        }
        let row_ids = distinct_sorted(pred);
        let col_ids = distinct_sorted(truth);
        let mut counts = vec![0u64; row_ids.len() * col_ids.len()];
        for (&p, &t) in pred.iter().zip(truth) {
            let r = row_ids.binary_search(&p).unwrap();
            let c = col_ids.binary_search(&t).unwrap();
            counts[r * col_ids.len() + c] += 1;
        }
        Ok(ContingencyTable {
            row_ids,
            col_ids,
            counts,
            n: pred.len() as u64,
        })
    }

    pub fn nrows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn ncols(&self) -> usize {
        self.col_ids.len()
    }

    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn col_ids(&self) -> &[usize] {
        &self.col_ids
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.col_ids.len() + col]
    }

    pub fn total(&self) -> u64 {
        self.n
    }

    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.nrows())
            .map(|r| (0..self.ncols()).map(|c| self.get(r, c)).sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.ncols())
            .map(|c| (0..self.nrows()).map(|r| self.get(r, c)).sum())
            .collect()
    }
}

fn distinct_sorted(ids: &[usize]) -> Vec<usize> {
    let mut v = ids.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// A minimum-cost matching between rows and columns of a cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Matched column per row; `None` for surplus rows of a tall matrix.
    pub row_to_col: Vec<Option<usize>>,
    pub total_cost: f64,
}

/// Minimum-cost one-to-one assignment (Hungarian method with potentials,
/// `O(r² c)`). Rectangular matrices are handled by leaving the surplus side
/// unmatched.
pub fn hungarian_match(cost: &DMatrix<f64>) -> Result<Assignment> {
    let (rows, cols) = cost.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyInput("cost matrix"));
    }
    for j in 0..cols {
        for i in 0..rows {
            if !cost[(i, j)].is_finite() {
                return Err(Error::NonFiniteCost { row: i, col: j });
            }
        }
    }
    // The core routine needs rows <= cols.
    let transposed = rows > cols;
    let a = if transposed { cost.transpose() } else { cost.clone() };
    let matched = hungarian_wide(&a);

    let mut row_to_col = vec![None; rows];
    if transposed {
        for (r, &c) in matched.iter().enumerate() {
            row_to_col[c] = Some(r);
        }
    } else {
        for (r, &c) in matched.iter().enumerate() {
            row_to_col[r] = Some(c);
        }
    }
    let total_cost = row_to_col
        .iter()
        .enumerate()
        .filter_map(|(r, c)| c.map(|c| cost[(r, c)]))
        .sum();
    Ok(Assignment { row_to_col, total_cost })
}

/// Returns the matched column of every row of an `n × m` matrix, `n <= m`.
fn hungarian_wide(a: &DMatrix<f64>) -> Vec<usize> {
    let (n, m) = a.shape();
    let inf = f64::INFINITY;
    // 1-based potentials; index 0 is the virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = a[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut matched = vec![0usize; n];
    for j in 1..=m {
        if owner[j] != 0 {
            matched[owner[j] - 1] = j - 1;
        }
    }
    matched
}

/// Fraction of samples correctly labeled under the best one-to-one mapping
/// from predicted clusters to true classes.
pub fn clustering_accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    let cost = DMatrix::from_fn(table.nrows(), table.ncols(), |r, c| -(table.get(r, c) as f64));
    let assignment = hungarian_match(&cost)?;
    let hits: u64 = assignment
        .row_to_col
        .iter()
        .enumerate()
        .filter_map(|(r, c)| c.map(|c| table.get(r, c)))
        .sum();
    Ok(hits as f64 / table.total() as f64)
}

/// How the mutual information is normalized by the two entropies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NmiNormalization {
    /// `I / sqrt(H(pred) · H(truth))`
    #[default]
    Geometric,
    /// `2 I / (H(pred) + H(truth))`
    Arithmetic,
}

/// Normalization used by [`nmi`].
pub const NMI_NORMALIZATION: NmiNormalization = NmiNormalization::Geometric;

/// Normalized mutual information with natural logarithms. Returns 0 when
/// either partition has zero entropy.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    nmi_with(pred, truth, NMI_NORMALIZATION)
}

pub fn nmi_with(pred: &[usize], truth: &[usize], norm: NmiNormalization) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    let n = table.total() as f64;
    let rows = table.row_sums();
    let cols = table.col_sums();
    let entropy = |sums: &[u64]| -> f64 {
        sums.iter()
            .filter(|&&s| s > 0)
            .map(|&s| {
                let p = s as f64 / n;
                -p * libm::log(p)
            })
            .sum()
    };
    let h_pred = entropy(&rows);
    let h_truth = entropy(&cols);
    if h_pred <= 0.0 || h_truth <= 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for r in 0..table.nrows() {
        for c in 0..table.ncols() {
            let nij = table.get(r, c);
            if nij == 0 {
                continue;
            }
            let nij = nij as f64;
            mi += nij / n * libm::log(n * nij / (rows[r] as f64 * cols[c] as f64));
        }
    }
    let denom = match norm {
        NmiNormalization::Geometric => libm::sqrt(h_pred * h_truth),
        NmiNormalization::Arithmetic => 0.5 * (h_pred + h_truth),
    };
    Ok((mi / denom).clamp(0.0, 1.0))
}

/// `(1/n) Σ_clusters max_class count`.
pub fn purity(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    let hits: u64 = (0..table.nrows())
        .map(|r| (0..table.ncols()).map(|c| table.get(r, c)).max().unwrap_or(0))
        .sum();
    Ok(hits as f64 / table.total() as f64)
}

/// ACC, NMI and purity of one clustering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusteringScores {
    pub acc: f64,
    pub nmi: f64,
    pub purity: f64,
}

pub fn score(pred: &[usize], truth: &[usize]) -> Result<ClusteringScores> {
    Ok(ClusteringScores {
        acc: clustering_accuracy(pred, truth)?,
        nmi: nmi(pred, truth)?,
        purity: purity(pred, truth)?,
    })
}
