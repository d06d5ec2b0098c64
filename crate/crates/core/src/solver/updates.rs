//! Exact block minimizers of the joint objective.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ModelState, Problem, SolverConfig, WorkBuffers};
use crate::linalg::{orthonormal_completion, orthonormality_error, procrustes_rotation};

/// Ridge added to the per-class counts when inverting `Y Yᵀ`.
pub const CENTROID_RIDGE: f64 = 1e-8;

/// `X Yᵀ`: per-class column sums of `x`, as a `d × k` matrix.
pub(crate) fn class_sums(x: &DMatrix<f64>, labels: &[usize], k: usize) -> DMatrix<f64> {
    let mut sums = DMatrix::zeros(x.nrows(), k);
    for (j, &c) in labels.iter().enumerate() {
        let mut col = sums.column_mut(c);
        col += x.column(j);
    }
    sums
}

/// W-block: `W_v = S_v V_vᵀ` from the thin SVD of `B_v = X_v Yᵀ A_vᵀ`.
pub fn update_basis(problem: &Problem, state: &mut ModelState, buffers: &mut WorkBuffers) {
    buffers.refresh_cross(problem, state);
    for (v, b) in buffers.cross.iter().enumerate() {
        let mut w = procrustes_rotation(b);
        if orthonormality_error(&w) > 1e-12 {
            // Degenerate singular subspaces can leave U slightly off; any
            // orthonormal completion attains the same trace.
            let mut rng = ChaCha8Rng::seed_from_u64(v as u64);
            w = orthonormal_completion(&w, problem.rank(), &mut rng).expect("rank was validated against every view");
        }
        state.bases[v] = w;
    }
}

/// A-block: `A_v = W_vᵀ X_v Yᵀ (Y Yᵀ + εI)⁻¹`. `Y Yᵀ` is diagonal, holding
/// the class sizes, so column `c` is the projected mean of class `c`; empty
/// classes get a zero column.
pub fn update_centroids(problem: &Problem, state: &mut ModelState) {
    let k = problem.rank();
    let counts = state.labels.counts();
    for (v, x) in problem.views().iter().enumerate() {
        let sums = class_sums(x, state.labels.assignment(), k);
        let mut a = state.bases[v].transpose() * sums;
        for (c, &count) in counts.iter().enumerate() {
            let mut col = a.column_mut(c);
            col /= count as f64 + CENTROID_RIDGE;
        }
        state.centroids[v] = a;
    }
}

/// Which extra term enters the per-sample label objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LabelTerm<'a> {
    /// `λ1 ‖y − g‖²` with `g` the one-hot ground truth at this row.
    Supervised { lambda1: f64, truth_row: usize },
    /// `−λ2 Σ_i ‖g_i − y‖²`, summarized by the labeled class counts `t`.
    Disjoint { lambda2: f64, label_counts: &'a [f64] },
}

/// `argmin_l b_l − 2 c_l` over `rows`, with `c = Σ_v α_v² M_vᵀ x_v` already
/// in `projected` and the supervised or disjointness term folded in here.
/// Ties go to the lowest row.
pub fn best_row(b: &[f64], projected: &[f64], term: LabelTerm<'_>, rows: Range<usize>) -> usize {
    let mut best = rows.start;
    let mut best_score = f64::INFINITY;
    for l in rows {
        let mut c = projected[l];
        match term {
            LabelTerm::Supervised { lambda1, truth_row } => {
                if l == truth_row {
                    c += lambda1;
                }
            }
            LabelTerm::Disjoint { lambda2, label_counts } => c -= lambda2 * label_counts[l],
        }
        let score = b[l] - 2.0 * c;
        if score < best_score {
            best_score = score;
            best = l;
        }
    }
    best
}

/// `Σ_v α_v² M_vᵀ X_v` restricted to the given columns, as `k × |cols|`.
fn weighted_projections(
    problem: &Problem,
    state: &ModelState,
    buffers: &WorkBuffers,
    cols: Range<usize>,
) -> DMatrix<f64> {
    let mut acc = DMatrix::zeros(problem.rank(), cols.len());
    for (v, x) in problem.views().iter().enumerate() {
        let w2 = state.alpha[v] * state.alpha[v];
        if w2 == 0.0 {
            continue;
        }
        let block = x.columns(cols.start, cols.len());
        acc += buffers.projections[v].tr_mul(&block) * w2;
    }
    acc
}

/// Y_l-block: every labeled column independently takes
/// `argmin_l b_l − 2(c_l + λ1 g_l)`.
pub fn update_labels_known(problem: &Problem, state: &mut ModelState, cfg: &SolverConfig, buffers: &mut WorkBuffers) {
    let n_l = problem.num_labeled();
    if n_l == 0 {
        return;
    }
    buffers.refresh_projections(state);
    let scores = weighted_projections(problem, state, buffers, 0..n_l);
    let k = problem.rank();
    let labels = state.labels.assignment_mut();
    for j in 0..n_l {
        let term = LabelTerm::Supervised {
            lambda1: cfg.lambda1,
            truth_row: problem.truth_rows()[j],
        };
        labels[j] = best_row(&buffers.diag, scores.column(j).as_slice(), term, 0..k);
    }
}

/// Y_u-block: every unlabeled column independently takes
/// `argmin_l b_l − 2 c_l + 2 λ2 t_l`, optionally only over novel rows.
pub fn update_labels_novel(problem: &Problem, state: &mut ModelState, cfg: &SolverConfig, buffers: &mut WorkBuffers) {
    let n_l = problem.num_labeled();
    let n = problem.num_samples();
    if n == n_l {
        return;
    }
    buffers.refresh_projections(state);
    let scores = weighted_projections(problem, state, buffers, n_l..n);
    let rows = if cfg.hard_restrict_novel {
        problem.num_known_rows()..problem.rank()
    } else {
        0..problem.rank()
    };
    let term = LabelTerm::Disjoint {
        lambda2: cfg.lambda2,
        label_counts: problem.label_counts(),
    };
    let labels = state.labels.assignment_mut();
    for j in 0..n - n_l {
        labels[n_l + j] = best_row(&buffers.diag, scores.column(j).as_slice(), term, rows.clone());
    }
}

/// Minimizer of `Σ α_v² r_v²` on the simplex: `α_v ∝ 1 / r_v²`. Views with
/// zero residual share all the weight equally.
pub fn closed_form_view_weights(residuals: &[f64]) -> Vec<f64> {
    let v = residuals.len();
    let zero: Vec<bool> = residuals.iter().map(|&r| r <= 0.0 || !(1.0 / r).is_finite()).collect();
    let zeros = zero.iter().filter(|&&z| z).count();
    if zeros > 0 {
        return zero.iter().map(|&z| if z { 1.0 / zeros as f64 } else { 0.0 }).collect();
    }
    let inv: Vec<f64> = residuals.iter().map(|&r| 1.0 / r).collect();
    let total: f64 = inv.iter().sum();
    if !total.is_finite() || total <= 0.0 {
        return vec![1.0 / v as f64; v];
    }
    inv.iter().map(|x| x / total).collect()
}

/// α-block. Leaves α untouched when the view weights are ablated.
pub fn update_view_weights(problem: &Problem, state: &mut ModelState, buffers: &mut WorkBuffers, cfg: &SolverConfig) {
    if cfg.ablate_alpha {
        return;
    }
    buffers.refresh_residuals(problem, state);
    state.alpha = closed_form_view_weights(&buffers.residuals);
}

/// `Σ_j ‖x_j − M e_{y_j}‖²` for one view.
pub(crate) fn view_residual(x: &DMatrix<f64>, m: &DMatrix<f64>, labels: &[usize]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            x.column(j)
                .iter()
                .zip(m.column(c).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum()
}

pub(crate) fn diag_of_gram(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.norm_squared()))
}
