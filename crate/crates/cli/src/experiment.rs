//! Timed fits and end-to-end runs.

use std::time::Instant;

use mvncd_core::metrics::score;
use mvncd_core::{fit_observed, FitEvent, FitResult, MultiViewDataset, SolverConfig};

use crate::error::{CliError, Result};
use crate::report::{Metrics, RunReport};

/// Relative slack (`· (|J| + 1)`) tolerated between consecutive objectives.
pub const MONOTONE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct TimedFit {
    /// `wall_time` is filled in.
    pub result: FitResult,
    /// Seconds spent on normalization and initialization.
    pub setup_seconds: f64,
    /// Seconds spent in each iteration.
    pub iteration_seconds: Vec<f64>,
}

impl TimedFit {
    pub fn mean_iteration_seconds(&self) -> f64 {
        if self.iteration_seconds.is_empty() {
            return 0.0;
        }
        self.iteration_seconds.iter().sum::<f64>() / self.iteration_seconds.len() as f64
    }
}

pub fn fit_timed(ds: &MultiViewDataset, cfg: &SolverConfig) -> Result<TimedFit> {
    let start = Instant::now();
    let mut mark = start;
    let mut setup = 0.0;
    let mut per_iteration = Vec::new();
    let mut observer = |event: &FitEvent<'_>| {
        let now = Instant::now();
        match event {
            FitEvent::Initialized { .. } => setup = (now - mark).as_secs_f64(),
            FitEvent::IterationEnd { .. } => per_iteration.push((now - mark).as_secs_f64()),
            FitEvent::Block { .. } => return,
        }
        mark = now;
    };
    let mut result = fit_observed(ds, cfg, &mut observer)?;
    result.wall_time = start.elapsed().as_secs_f64();
    Ok(TimedFit {
        result,
        setup_seconds: setup,
        iteration_seconds: per_iteration,
    })
}

/// Scores predicted rows or cluster ids against the novel-class truth.
pub fn evaluate(ds: &MultiViewDataset, assignment: &[usize]) -> Result<Metrics> {
    let truth = ds.novel_truth();
    if assignment.len() != truth.len() {
        return Err(CliError::Invalid(format!(
            "assignment has {} entries but the dataset has {} unlabeled samples",
            assignment.len(),
            truth.len()
        )));
    }
    Ok(score(assignment, &truth)?.into())
}

/// First iteration whose objective rises beyond [`MONOTONE_SLACK`].
pub fn check_monotone(result: &FitResult) -> Result<()> {
    for (i, w) in result.objective_trace.windows(2).enumerate() {
        if w[1] > w[0] + MONOTONE_SLACK * (w[0].abs() + 1.0) {
            return Err(CliError::Monotonicity {
                iteration: i + 1,
                before: w[0],
                after: w[1],
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub fit: TimedFit,
}

/// Fits, verifies monotone descent and scores the novel set.
pub fn run_experiment(ds: &MultiViewDataset, cfg: &SolverConfig) -> Result<RunOutcome> {
    let fit = fit_timed(ds, cfg)?;
    check_monotone(&fit.result)?;
    let metrics = evaluate(ds, &fit.result.novel_assignment)?;
    let report = RunReport::new(ds, cfg, &fit.result, metrics);
    Ok(RunOutcome { report, fit })
}
