//! Alternating minimization of
//!
//! ```text
//! J = Σ_v α_v² ‖X_v − W_v A_v Y‖²_F + λ1 ‖Y_l − G_l‖²_F − λ2 Σ_{g ∈ G_l} Σ_{y ∈ Y_u} ‖g − y‖²
//! ```
//!
//! subject to `W_vᵀW_v = I_k`, one-hot columns in `Y` and `α` on the
//! simplex. Every iteration runs the four exact block minimizers in the
//! order W, A, Y, α, so `J` never increases.

mod problem;
mod updates;

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use problem::Problem;
pub use updates::{
    best_row, closed_form_view_weights, update_basis, update_centroids, update_labels_known, update_labels_novel,
    update_view_weights, LabelTerm, CENTROID_RIDGE,
};

use crate::baselines::{kmeans_fit, KMeansOptions};
use crate::dataset::{NormalizeMode, OneHotLabels};
use crate::linalg::{leading_left_singular_vectors, orthonormality_error, stack_columns};
use crate::{Error, MultiViewDataset, Result};
use updates::{class_sums, diag_of_gram, view_residual};

/// How the unlabeled columns of `Y` are initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitStrategy {
    /// k-means++ / Lloyd on the concatenated unlabeled features, clusters
    /// mapped onto the novel rows.
    #[default]
    KMeans,
    /// A uniformly random novel row per sample.
    Random,
}

impl core::str::FromStr for InitStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans" => Ok(InitStrategy::KMeans),
            "random" => Ok(InitStrategy::Random),
            other => Err(Error::InvalidConfig(alloc::format!("unknown init strategy {other:?}"))),
        }
    }
}

impl core::fmt::Display for InitStrategy {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            InitStrategy::KMeans => "kmeans",
            InitStrategy::Random => "random",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Weight of the known-class supervision term.
    pub lambda1: f64,
    /// Weight of the known/novel disjointness term.
    pub lambda2: f64,
    pub max_iter: usize,
    /// Stop when `|J_t − J_{t+1}| / (|J_t| + 1)` drops below this.
    pub tol: f64,
    pub seed: u64,
    pub init_y_novel: InitStrategy,
    pub normalize: NormalizeMode,
    /// Keep α uniform.
    pub ablate_alpha: bool,
    /// Factorize only the unlabeled samples and drop both λ terms.
    pub ablate_labeled: bool,
    /// Only let unlabeled samples take novel-class rows.
    pub hard_restrict_novel: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda1: 1.0,
            lambda2: 1.0,
            max_iter: 100,
            tol: 1e-7,
            seed: 0,
            init_y_novel: InitStrategy::KMeans,
            normalize: NormalizeMode::ZScore,
            ablate_alpha: false,
            ablate_labeled: false,
            hard_restrict_novel: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if !(self.lambda1 >= 0.0 && self.lambda1.is_finite()) {
            return bad("lambda1 must be finite and >= 0");
        }
        if !(self.lambda2 >= 0.0 && self.lambda2.is_finite()) {
            return bad("lambda2 must be finite and >= 0");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be >= 1");
        }
        if !(self.tol >= 0.0) {
            return bad("tol must be >= 0");
        }
        Ok(())
    }
}

/// The optimization variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    /// `W_v`, `d_v × k` with orthonormal columns.
    pub bases: Vec<DMatrix<f64>>,
    /// `A_v`, `k × k`; column `c` is the class-`c` centroid in basis coordinates.
    pub centroids: Vec<DMatrix<f64>>,
    /// `Y = [Y_l, Y_u]` over the problem's columns.
    pub labels: OneHotLabels,
    /// View weights on the probability simplex.
    pub alpha: Vec<f64>,
}

impl ModelState {
    /// Largest `‖W_vᵀW_v − I‖_max` over views.
    pub fn max_orthonormality_error(&self) -> f64 {
        self.bases.iter().map(orthonormality_error).fold(0.0, f64::max)
    }

    /// Checks orthonormality (1e-8), the simplex (1e-10) and shapes.
    pub fn check_invariants(&self, problem: &Problem) -> Result<()> {
        let deviation = self.max_orthonormality_error();
        if deviation > 1e-8 {
            return Err(Error::NotOrthonormal { deviation });
        }
        let sum: f64 = self.alpha.iter().sum();
        if self.alpha.iter().any(|&a| a < 0.0) || (sum - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidConfig(alloc::format!(
                "alpha left the simplex: {:?}",
                self.alpha
            )));
        }
        if self.labels.len() != problem.num_samples() || self.labels.num_classes() != problem.rank() {
            return Err(Error::DimensionMismatch {
                expected: problem.num_samples(),
                found: self.labels.len(),
                what: "label columns".into(),
            });
        }
        Ok(())
    }

    /// Rows currently assigned to the unlabeled columns.
    pub fn novel_rows<'a>(&'a self, problem: &Problem) -> &'a [usize] {
        &self.labels.assignment()[problem.num_labeled()..]
    }
}

/// Intermediate products shared by the block updates.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkBuffers {
    /// `M_v = W_v A_v`.
    pub projections: Vec<DMatrix<f64>>,
    /// `B_v = X_v Yᵀ A_vᵀ`.
    pub cross: Vec<DMatrix<f64>>,
    /// `b = diag(Σ_v α_v² M_vᵀ M_v)`.
    pub diag: Vec<f64>,
    /// `r_v² = ‖X_v − W_v A_v Y‖²_F`.
    pub residuals: Vec<f64>,
}

impl WorkBuffers {
    pub fn new(problem: &Problem) -> Self {
        let k = problem.rank();
        WorkBuffers {
            projections: problem.views().iter().map(|x| DMatrix::zeros(x.nrows(), k)).collect(),
            cross: problem.views().iter().map(|x| DMatrix::zeros(x.nrows(), k)).collect(),
            diag: vec![0.0; k],
            residuals: vec![0.0; problem.num_views()],
        }
    }

    pub fn refresh_cross(&mut self, problem: &Problem, state: &ModelState) {
        for (v, x) in problem.views().iter().enumerate() {
            let sums = class_sums(x, state.labels.assignment(), problem.rank());
            self.cross[v] = sums * state.centroids[v].transpose();
        }
    }

    pub fn refresh_projections(&mut self, state: &ModelState) {
        self.diag.iter_mut().for_each(|b| *b = 0.0);
        for (v, (w, a)) in state.bases.iter().zip(&state.centroids).enumerate() {
            let m = w * a;
            let w2 = state.alpha[v] * state.alpha[v];
            for (b, g) in self.diag.iter_mut().zip(diag_of_gram(&m).iter()) {
                *b += w2 * g;
            }
            self.projections[v] = m;
        }
    }

    pub fn refresh_residuals(&mut self, problem: &Problem, state: &ModelState) {
        for (v, x) in problem.views().iter().enumerate() {
            let m = &state.bases[v] * &state.centroids[v];
            self.residuals[v] = view_residual(x, &m, state.labels.assignment());
        }
    }
}

/// The three terms of the objective, kept apart for reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms {
    pub reconstruction: f64,
    pub supervision: f64,
    pub disjointness: f64,
}

impl ObjectiveTerms {
    pub fn total(&self) -> f64 {
        self.reconstruction + self.supervision + self.disjointness
    }
}

pub fn objective_terms(problem: &Problem, state: &ModelState, cfg: &SolverConfig) -> ObjectiveTerms {
    let labels = state.labels.assignment();
    let reconstruction = problem
        .views()
        .iter()
        .enumerate()
        .map(|(v, x)| {
            let m = &state.bases[v] * &state.centroids[v];
            state.alpha[v] * state.alpha[v] * view_residual(x, &m, labels)
        })
        .sum();
    let n_l = problem.num_labeled();
    let mismatched = labels[..n_l]
        .iter()
        .zip(problem.truth_rows())
        .filter(|(y, g)| y != g)
        .count();
    let supervision = cfg.lambda1 * 2.0 * mismatched as f64;

    // Σ_i Σ_j ‖g_i − y_j‖² = 2 n_l n_u − 2 Σ_c t_c u_c for one-hot vectors.
    let n_u = problem.num_unlabeled();
    let mut novel_counts = vec![0.0; problem.rank()];
    for &r in &labels[n_l..] {
        novel_counts[r] += 1.0;
    }
    let overlap: f64 = problem
        .label_counts()
        .iter()
        .zip(&novel_counts)
        .map(|(t, u)| t * u)
        .sum();
    let pair_distance = 2.0 * n_l as f64 * n_u as f64 - 2.0 * overlap;
    ObjectiveTerms {
        reconstruction,
        supervision,
        disjointness: -cfg.lambda2 * pair_distance,
    }
}

pub fn objective_value(problem: &Problem, state: &ModelState, cfg: &SolverConfig) -> f64 {
    objective_terms(problem, state, cfg).total()
}

/// `−2 λ2 n_l n_u`: the first two terms are non-negative and each of the
/// `n_l n_u` pair distances is at most 2.
pub fn objective_lower_bound(problem: &Problem, cfg: &SolverConfig) -> f64 {
    -2.0 * cfg.lambda2 * problem.num_labeled() as f64 * problem.num_unlabeled() as f64
}

const BASIS_STREAM: u64 = 0x6261_7369_7300_0001;
const LABEL_STREAM: u64 = 0x6c61_6265_6c00_0002;

/// Starting point: uniform α, `Y_l = G_l`, `Y_u` from k-means (or random
/// novel rows), `W_v` the leading left singular vectors of `X_v`, and `A_v`
/// from one centroid update.
pub fn initialize(problem: &Problem, cfg: &SolverConfig) -> Result<ModelState> {
    cfg.validate()?;
    let k = problem.rank();
    let k_known = problem.num_known_rows();
    let k_u = k - k_known;
    let n_l = problem.num_labeled();
    let n = problem.num_samples();

    let mut labels: Vec<usize> = problem.truth_rows().to_vec();
    if n > n_l {
        if k_u == 0 {
            return Err(Error::InvalidSplit("unlabeled samples but no novel rows".into()));
        }
        match cfg.init_y_novel {
            InitStrategy::KMeans => {
                let views: Vec<&DMatrix<f64>> = problem.views().iter().collect();
                let cols: Vec<usize> = (n_l..n).collect();
                let points = stack_columns(&views, &cols);
                let km = kmeans_fit(&points, k_u, cfg.seed, KMeansOptions::default())?;
                labels.extend(km.assignment.iter().map(|&c| k_known + c));
            }
            InitStrategy::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ LABEL_STREAM);
                labels.extend((n_l..n).map(|_| k_known + rng.random_range(0..k_u)));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ BASIS_STREAM);
    let bases = problem
        .views()
        .iter()
        .enumerate()
        .map(|(v, x)| {
            leading_left_singular_vectors(x, k, &mut rng).map_err(|e| match e {
                Error::RankTooLarge { dim, rank, .. } => Error::RankTooLarge { view: v, dim, rank },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let v = problem.num_views();
    let mut state = ModelState {
        centroids: vec![DMatrix::zeros(k, k); v],
        bases,
        labels: OneHotLabels::new(labels, k)?,
        alpha: vec![1.0 / v as f64; v],
    };
    update_centroids(problem, &mut state);
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Basis,
    Centroids,
    LabelsKnown,
    LabelsNovel,
    ViewWeights,
}

impl Block {
    pub const ORDER: [Block; 5] = [
        Block::Basis,
        Block::Centroids,
        Block::LabelsKnown,
        Block::LabelsNovel,
        Block::ViewWeights,
    ];
}

/// Progress notifications from [`fit_observed`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitEvent<'a> {
    Initialized {
        objective: f64,
        state: &'a ModelState,
    },
    /// Only emitted when the observer asks for block objectives.
    Block {
        iteration: usize,
        block: Block,
        objective: f64,
    },
    IterationEnd {
        iteration: usize,
        objective: f64,
        state: &'a ModelState,
    },
}

pub trait FitObserver {
    /// Whether to evaluate the objective after every block update.
    fn wants_block_objectives(&self) -> bool {
        false
    }

    fn on_event(&mut self, event: &FitEvent<'_>);
}

impl FitObserver for () {
    fn on_event(&mut self, _: &FitEvent<'_>) {}
}

impl<F: FnMut(&FitEvent<'_>)> FitObserver for F {
    fn on_event(&mut self, event: &FitEvent<'_>) {
        self(event)
    }
}

/// Wraps a closure and requests block-level objective evaluations.
pub struct BlockObserver<F>(pub F);

impl<F: FnMut(&FitEvent<'_>)> FitObserver for BlockObserver<F> {
    fn wants_block_objectives(&self) -> bool {
        true
    }

    fn on_event(&mut self, event: &FitEvent<'_>) {
        (self.0)(event)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// One-hot row (full `k`-class layout) of every unlabeled sample, in
    /// dataset order.
    pub novel_assignment: Vec<usize>,
    /// Objective of the initial state followed by one value per iteration.
    pub objective_trace: Vec<f64>,
    /// α of the initial state followed by one entry per iteration.
    pub alpha_trace: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    /// Seconds; the core crate has no clock and leaves this at 0.
    pub wall_time: f64,
    pub lower_bound: f64,
    pub state: ModelState,
}

impl FitResult {
    /// Class ids of the unlabeled samples under the dataset's row layout.
    pub fn novel_classes(&self, ds: &MultiViewDataset) -> Vec<usize> {
        self.novel_assignment.iter().map(|&r| ds.class_of_row(r)).collect()
    }

    /// Whether the trace never rises by more than `slack · (|J| + 1)`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.objective_trace
            .windows(2)
            .all(|w| w[1] <= w[0] + slack * (w[0].abs() + 1.0))
    }
}

pub fn fit(ds: &MultiViewDataset, cfg: &SolverConfig) -> Result<FitResult> {
    fit_observed(ds, cfg, &mut ())
}

pub fn fit_observed<O: FitObserver + ?Sized>(
    ds: &MultiViewDataset,
    cfg: &SolverConfig,
    observer: &mut O,
) -> Result<FitResult> {
    cfg.validate()?;
    let problem = Problem::new(ds, cfg)?;
    let mut result = fit_problem(&problem, cfg, observer)?;
    let n_l = problem.num_labeled();
    result.novel_assignment = result.state.labels.assignment()[n_l..]
        .iter()
        .map(|&r| problem.raw_row(r))
        .collect();
    Ok(result)
}

/// Runs the alternating minimization on a prepared problem.
/// `novel_assignment` holds rows of `problem`, not of the full layout.
pub fn fit_problem<O: FitObserver + ?Sized>(
    problem: &Problem,
    cfg: &SolverConfig,
    observer: &mut O,
) -> Result<FitResult> {
    let mut state = initialize(problem, cfg)?;
    let mut buffers = WorkBuffers::new(problem);
    let block_level = observer.wants_block_objectives();

    let mut objective = objective_value(problem, &state, cfg);
    observer.on_event(&FitEvent::Initialized {
        objective,
        state: &state,
    });
    let mut objective_trace = vec![objective];
    let mut alpha_trace = vec![state.alpha.clone()];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        iterations += 1;
        for block in Block::ORDER {
            match block {
                Block::Basis => update_basis(problem, &mut state, &mut buffers),
                Block::Centroids => update_centroids(problem, &mut state),
                Block::LabelsKnown => update_labels_known(problem, &mut state, cfg, &mut buffers),
                Block::LabelsNovel => update_labels_novel(problem, &mut state, cfg, &mut buffers),
                Block::ViewWeights => update_view_weights(problem, &mut state, &mut buffers, cfg),
            }
            if block_level {
                let objective = objective_value(problem, &state, cfg);
                observer.on_event(&FitEvent::Block {
                    iteration: iterations,
                    block,
                    objective,
                });
            }
        }
        let next = objective_value(problem, &state, cfg);
        observer.on_event(&FitEvent::IterationEnd {
            iteration: iterations,
            objective: next,
            state: &state,
        });
        objective_trace.push(next);
        alpha_trace.push(state.alpha.clone());
        let change = (objective - next).abs() / (objective.abs() + 1.0);
        objective = next;
        if change < cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(FitResult {
        novel_assignment: state.novel_rows(problem).to_vec(),
        objective_trace,
        alpha_trace,
        iterations,
        converged,
        wall_time: 0.0,
        lower_bound: objective_lower_bound(problem, cfg),
        state,
    })
}

#[cfg(test)]
mod tests;
