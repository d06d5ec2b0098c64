//! Brute-force and numeric reference solutions used to certify the solver's
//! closed-form block updates. Nothing here calls into the solver's fast
//! paths: objectives are summed term by term, the Procrustes bound comes
//! from the eigenvalues of `BᵀB` rather than an SVD.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::orthonormality_error;
use crate::solver::{ModelState, Problem, SolverConfig};
use crate::{Error, Result};

/// Extra term of a single-sample label objective.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleTerm {
    /// `λ1 ‖y − g‖²`, `g` the one-hot vector at `truth_row`.
    Supervised { lambda1: f64, truth_row: usize },
    /// `−λ2 Σ_i ‖g_i − y‖²` over the labeled set, given as class counts.
    Disjoint { lambda2: f64, label_counts: Vec<f64> },
}

fn onehot(k: usize, l: usize) -> DVector<f64> {
    let mut e = DVector::zeros(k);
    e[l] = 1.0;
    e
}

/// Evaluates `Σ_v α_v² ‖x_v − M_v y‖² + term(y)` for every one-hot `y` and
/// returns the minimizing row (lowest on ties).
pub fn brute_force_label(
    sample: &[DVector<f64>],
    projections: &[DMatrix<f64>],
    alpha: &[f64],
    term: &OracleTerm,
) -> usize {
    let k = projections[0].ncols();
    let mut best = 0;
    let mut best_value = f64::INFINITY;
    for l in 0..k {
        let y = onehot(k, l);
        let mut value = 0.0;
        for ((x, m), &a) in sample.iter().zip(projections).zip(alpha) {
            value += a * a * (x - m * &y).norm_squared();
        }
        value += match term {
            OracleTerm::Supervised { lambda1, truth_row } => lambda1 * (&y - onehot(k, *truth_row)).norm_squared(),
            OracleTerm::Disjoint { lambda2, label_counts } => {
                let mut s = 0.0;
                for (c, &t) in label_counts.iter().enumerate() {
                    s += t * (onehot(k, c) - &y).norm_squared();
                }
                -lambda2 * s
            }
        };
        if value < best_value {
            best_value = value;
            best = l;
        }
    }
    best
}

/// Term-by-term evaluation of the objective: reconstruction of every view via
/// explicit `W A Y`, the supervision term via explicit one-hot matrices and
/// the disjointness term as a double loop over labeled/unlabeled pairs.
pub fn naive_objective(problem: &Problem, state: &ModelState, cfg: &SolverConfig) -> f64 {
    let y = state.labels.to_matrix();
    let n_l = problem.num_labeled();
    let k = problem.rank();
    let mut total = 0.0;
    for (v, x) in problem.views().iter().enumerate() {
        let recon = &state.bases[v] * &state.centroids[v] * &y;
        let mut r = 0.0;
        for j in 0..x.ncols() {
            for i in 0..x.nrows() {
                let d = x[(i, j)] - recon[(i, j)];
                r += d * d;
            }
        }
        total += state.alpha[v] * state.alpha[v] * r;
    }
    let mut sup = 0.0;
    for (j, &g) in problem.truth_rows().iter().enumerate() {
        sup += (y.column(j) - onehot(k, g)).norm_squared();
    }
    total += cfg.lambda1 * sup;
    let mut pairs = 0.0;
    for &g in problem.truth_rows() {
        let g = onehot(k, g);
        for j in n_l..problem.num_samples() {
            pairs += (&g - y.column(j)).norm_squared();
        }
    }
    total - cfg.lambda2 * pairs
}

/// Largest allowed `k^{n_u}` for [`exhaustive_novel_fit`].
pub const EXHAUSTIVE_LIMIT: u128 = 1_000_000;

/// Globally optimal `Y_u` for fixed `W`, `A`, `α` and `Y_l`, by enumerating
/// every assignment of the unlabeled columns (lexicographically first
/// optimum). Returns the rows of the unlabeled columns and the objective.
pub fn exhaustive_novel_fit(problem: &Problem, state: &ModelState, cfg: &SolverConfig) -> Result<(Vec<usize>, f64)> {
    let k = problem.rank();
    let n_l = problem.num_labeled();
    let n_u = problem.num_unlabeled();
    let size = (k as u128).checked_pow(n_u as u32).unwrap_or(u128::MAX);
    if size > EXHAUSTIVE_LIMIT {
        return Err(Error::InstanceTooLarge {
            size,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let rows: Vec<usize> = if cfg.hard_restrict_novel {
        (problem.num_known_rows()..k).collect()
    } else {
        (0..k).collect()
    };

    let mut candidate = state.clone();
    let mut digits = vec![0usize; n_u];
    let mut best: Option<(Vec<usize>, f64)> = None;
    loop {
        let assignment: Vec<usize> = digits.iter().map(|&d| rows[d]).collect();
        {
            let labels = candidate.labels.assignment_mut();
            labels[n_l..].copy_from_slice(&assignment);
        }
        let value = naive_objective(problem, &candidate, cfg);
        if best.as_ref().is_none_or(|(_, b)| value < *b) {
            best = Some((assignment, value));
        }
        // Odometer increment, most significant digit first.
        let mut pos = n_u;
        loop {
            if pos == 0 {
                return Ok(best.expect("at least one assignment"));
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < rows.len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Projected gradient descent for `min Σ α_v² r_v²` on the simplex.
pub fn simplex_minimize_numeric(r_sq: &[f64]) -> Vec<f64> {
    let v = r_sq.len();
    let mut alpha = vec![1.0 / v as f64; v];
    if v == 1 {
        return alpha;
    }
    let lipschitz = 2.0 * r_sq.iter().copied().fold(0.0, f64::max);
    if lipschitz <= 0.0 {
        return alpha;
    }
    let step = 1.0 / lipschitz;
    for _ in 0..2_000_000 {
        let moved: Vec<f64> = alpha.iter().zip(r_sq).map(|(a, r)| a - step * 2.0 * r * a).collect();
        let next = project_to_simplex(&moved);
        let delta = next.iter().zip(&alpha).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        alpha = next;
        if delta < 1e-15 {
            break;
        }
    }
    alpha
}

/// Euclidean projection onto `{α ≥ 0, Σα = 1}` (sort-and-threshold).
pub fn project_to_simplex(x: &[f64]) -> Vec<f64> {
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cumulative += s;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        }
    }
    x.iter().map(|&xi| (xi - theta).max(0.0)).collect()
}

/// Nuclear norm of `B` via a symmetric eigendecomposition.
pub fn singular_value_sum(b: &DMatrix<f64>) -> f64 {
    // Eigenvalues of [[0, B], [Bᵀ, 0]] are ±σ_i padded with zeros; unlike
    // sqrt(eig(BᵀB)) this keeps small σ accurate to machine precision.
    let (d, k) = b.shape();
    let mut aug = DMatrix::zeros(d + k, d + k);
    aug.view_mut((0, d), (d, k)).copy_from(b);
    aug.view_mut((d, 0), (k, d)).copy_from(&b.transpose());
    SymmetricEigen::new(aug)
        .eigenvalues
        .iter()
        .map(|e| e.abs())
        .sum::<f64>()
        / 2.0
}

/// Uniformly distributed `d × k` matrix with orthonormal columns.
pub fn random_orthonormal<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, k, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..k {
        if r[(c, c)] < 0.0 {
            let mut col = q.column_mut(c);
            col *= -1.0;
        }
    }
    q
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcrustesReport {
    pub passed: bool,
    /// `Tr(WᵀB)` of the candidate.
    pub value: f64,
    /// `Σ σ_i(B)`, the optimum.
    pub bound: f64,
    /// Best `Tr(W'ᵀB)` among the random competitors.
    pub best_random: f64,
}

/// Certifies that `w` maximizes `Tr(WᵀB)` over orthonormal `W`: its value
/// must reach the singular value sum within 1e-8 (relative to `1 + Σσ`) and
/// no random orthonormal competitor may beat it.
pub fn procrustes_bound_check<R: Rng + ?Sized>(
    b: &DMatrix<f64>,
    w: &DMatrix<f64>,
    draws: usize,
    rng: &mut R,
) -> Result<ProcrustesReport> {
    let deviation = orthonormality_error(w);
    if deviation > 1e-8 {
        return Err(Error::NotOrthonormal { deviation });
    }
    let trace = |w: &DMatrix<f64>| w.iter().zip(b.iter()).map(|(a, c)| a * c).sum::<f64>();
    let value = trace(w);
    let bound = singular_value_sum(b);
    let slack = 1e-8 * (1.0 + bound);
    let mut best_random = f64::NEG_INFINITY;
    for _ in 0..draws {
        let cand = random_orthonormal(b.nrows(), b.ncols(), rng);
        best_random = best_random.max(trace(&cand));
    }
    let passed = value >= bound - slack && best_random <= value + slack;
    Ok(ProcrustesReport {
        passed,
        value,
        bound,
        best_random,
    })
}
