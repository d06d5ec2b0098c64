//! Machine-readable run reports (JSON) and convergence traces (CSV).

use std::fmt::Write as _;

use mvncd_core::metrics::ClusteringScores;
use mvncd_core::{FitResult, MultiViewDataset, SolverConfig};
use serde::{Deserialize, Serialize};

/// Bumped whenever a field is added, removed or changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub schema_version: u32,
    pub dataset: DatasetSummary,
    pub config: ConfigEcho,
    pub metrics: Metrics,
    /// Final view weights.
    pub alpha: Vec<f64>,
    /// Initial objective followed by one value per iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Seconds; the only field that differs between identical runs.
    pub wall_time: f64,
    pub version: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSummary {
    pub n: usize,
    pub n_l: usize,
    pub n_u: usize,
    pub num_views: usize,
    pub dims: Vec<usize>,
    pub k_l: usize,
    pub k_u: usize,
    pub known_classes: Vec<usize>,
}

impl DatasetSummary {
    pub fn of(ds: &MultiViewDataset) -> Self {
        DatasetSummary {
            n: ds.num_samples(),
            n_l: ds.labeled_indices().len(),
            n_u: ds.unlabeled_indices().len(),
            num_views: ds.num_views(),
            dims: ds.dims(),
            k_l: ds.known_classes().len(),
            k_u: ds.novel_classes().len(),
            known_classes: ds.known_classes().to_vec(),
        }
    }
}

/// Every solver setting except the seed, which sits at the top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigEcho {
    pub lambda1: f64,
    pub lambda2: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub init_y: String,
    pub normalize: String,
    pub ablate_alpha: bool,
    pub ablate_labeled: bool,
    pub hard_restrict_novel: bool,
}

impl ConfigEcho {
    pub fn of(cfg: &SolverConfig) -> Self {
        ConfigEcho {
            lambda1: cfg.lambda1,
            lambda2: cfg.lambda2,
            max_iter: cfg.max_iter,
            tol: cfg.tol,
            init_y: cfg.init_y_novel.to_string(),
            normalize: cfg.normalize.to_string(),
            ablate_alpha: cfg.ablate_alpha,
            ablate_labeled: cfg.ablate_labeled,
            hard_restrict_novel: cfg.hard_restrict_novel,
        }
    }
}

/// Scores on the unlabeled (novel-class) samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metrics {
    pub acc: f64,
    pub nmi: f64,
    pub purity: f64,
}

impl From<ClusteringScores> for Metrics {
    fn from(s: ClusteringScores) -> Self {
        Metrics {
            acc: s.acc,
            nmi: s.nmi,
            purity: s.purity,
        }
    }
}

impl RunReport {
    pub fn new(ds: &MultiViewDataset, cfg: &SolverConfig, result: &FitResult, metrics: Metrics) -> Self {
        RunReport {
            schema_version: SCHEMA_VERSION,
            dataset: DatasetSummary::of(ds),
            config: ConfigEcho::of(cfg),
            metrics,
            alpha: result.state.alpha.clone(),
            objective_trace: result.objective_trace.clone(),
            iterations: result.iterations,
            converged: result.converged,
            wall_time: result.wall_time,
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.seed,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// `x` with 12 significant digits.
pub fn format_sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// `iter,objective,alpha_0,...`; row 0 is the initial state.
pub fn trace_csv(result: &FitResult) -> String {
    let views = result.alpha_trace.first().map_or(0, Vec::len);
    let mut out = String::from("iter,objective");
    for v in 0..views {
        write!(out, ",alpha_{v}").unwrap();
    }
    out.push('\n');
    for (i, (j, alpha)) in result.objective_trace.iter().zip(&result.alpha_trace).enumerate() {
        write!(out, "{i},{}", format_sig12(*j)).unwrap();
        for a in alpha {
            write!(out, ",{}", format_sig12(*a)).unwrap();
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_sig12(1.0), "1.00000000000e0");
        assert_eq!(format_sig12(-1234.5678901234567), "-1.23456789012e3");
        let back: f64 = format_sig12(core::f64::consts::PI).parse().unwrap();
        assert!((back - core::f64::consts::PI).abs() < 1e-11);
    }

    #[test]
    fn report_rejects_unknown_fields() {
        let m = Metrics {
            acc: 1.0,
            nmi: 1.0,
            purity: 1.0,
        };
        let mut v = serde_json::to_value(m).unwrap();
        v["extra"] = 1.into();
        assert!(serde_json::from_value::<Metrics>(v).is_err());
    }
}
