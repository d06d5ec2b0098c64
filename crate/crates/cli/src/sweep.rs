//! Concurrent λ1 × λ2 grid search.

use std::fmt::Write as _;
use std::path::Path;

use mvncd_core::{MultiViewDataset, SolverConfig};
use rayon::prelude::*;

use crate::experiment::run_experiment;
use crate::io::write_atomic;
use crate::report::Metrics;

/// `10^0 … 10^5`.
pub fn default_grid() -> Vec<f64> {
    (0..6).map(|e| 10f64.powi(e)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub lambda1: f64,
    pub lambda2: f64,
    /// A failed cell keeps its diagnostic; the sweep carries on.
    pub outcome: Result<Metrics, String>,
}

/// File name of a cell's report.
pub fn cell_file_name(lambda1: f64, lambda2: f64) -> String {
    format!("report_l1={lambda1}_l2={lambda2}.json")
}

/// Runs every grid cell (row-major in `lambda1`). With `out_dir`, each
/// cell's report is written there as it finishes.
pub fn run_sweep(
    ds: &MultiViewDataset,
    base: &SolverConfig,
    lambda1_grid: &[f64],
    lambda2_grid: &[f64],
    out_dir: Option<&Path>,
) -> Vec<SweepCell> {
    let cells: Vec<(f64, f64)> = lambda1_grid
        .iter()
        .flat_map(|&a| lambda2_grid.iter().map(move |&b| (a, b)))
        .collect();
    cells
        .par_iter()
        .map(|&(lambda1, lambda2)| {
            let cfg = SolverConfig {
                lambda1,
                lambda2,
                ..base.clone()
            };
            let outcome = run_experiment(ds, &cfg).and_then(|run| {
                if let Some(dir) = out_dir {
                    write_atomic(
                        &dir.join(cell_file_name(lambda1, lambda2)),
                        run.report.to_json().as_bytes(),
                    )?;
                }
                Ok(run.report.metrics)
            });
            SweepCell {
                lambda1,
                lambda2,
                outcome: outcome.map_err(|e| e.to_string()),
            }
        })
        .collect()
}

/// `lambda1,lambda2,acc,nmi,purity,error`; failed cells leave the metrics
/// empty.
pub fn summary_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from("lambda1,lambda2,acc,nmi,purity,error\n");
    for c in cells {
        match &c.outcome {
            Ok(m) => writeln!(out, "{},{},{},{},{},", c.lambda1, c.lambda2, m.acc, m.nmi, m.purity),
            Err(e) => writeln!(out, "{},{},,,,\"{}\"", c.lambda1, c.lambda2, e.replace('"', "'")),
        }
        .unwrap();
    }
    out
}

/// The successful cell with the highest novel-set ACC.
pub fn best_cell(cells: &[SweepCell]) -> Option<&SweepCell> {
    cells.iter().filter(|c| c.outcome.is_ok()).max_by(|a, b| {
        let acc = |c: &SweepCell| c.outcome.as_ref().map_or(f64::NEG_INFINITY, |m| m.acc);
        acc(a).total_cmp(&acc(b))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_and_summary() {
        assert_eq!(default_grid(), vec![1.0, 10.0, 100.0, 1e3, 1e4, 1e5]);
        let cells = vec![
            SweepCell {
                lambda1: 1.0,
                lambda2: 10.0,
                outcome: Ok(Metrics {
                    acc: 0.5,
                    nmi: 0.25,
                    purity: 0.75,
                }),
            },
            SweepCell {
                lambda1: 2.0,
                lambda2: 1.0,
                outcome: Err("bad \"x\"".into()),
            },
        ];
        assert_eq!(
            summary_csv(&cells),
            "lambda1,lambda2,acc,nmi,purity,error\n1,10,0.5,0.25,0.75,\n2,1,,,,\"bad 'x'\"\n"
        );
        assert_eq!(best_cell(&cells).unwrap().lambda1, 1.0);
    }
}
