//! Command-line definitions and dispatch.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use mvncd_core::solver::InitStrategy;
use mvncd_core::{generate_synthetic, MultiViewDataset, NormalizeMode, SolverConfig, SyntheticSpec};

use crate::error::{CliError, Result};
use crate::experiment::{evaluate, run_experiment};
use crate::io::{create_dir, load_dataset_with_split, read_assignment, write_atomic, write_dataset};
use crate::report::trace_csv;
use crate::sweep::{best_cell, default_grid, run_sweep, summary_csv};

#[derive(Debug, Parser)]
#[command(name = "mvncd", version, about = "Multi-view novel class discovery")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one configuration and write report.json, trace.csv and assignment.csv.
    Run(RunArgs),
    /// Fit every (λ1, λ2) pair of a grid.
    Sweep(SweepArgs),
    /// Generate a synthetic dataset directory.
    Synth(SynthArgs),
    /// Score an externally produced assignment of the unlabeled samples.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset directory or manifest file.
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated known class ids; defaults to the first half.
    #[arg(long, value_delimiter = ',')]
    pub known_classes: Option<Vec<usize>>,
}

impl DataArgs {
    fn load(&self) -> Result<MultiViewDataset> {
        load_dataset_with_split(&self.data, self.known_classes.as_deref())
    }
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1.0)]
    pub lambda1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda2: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// zscore, l2 or none.
    #[arg(long, default_value = "zscore")]
    pub normalize: NormalizeMode,
    /// kmeans or random.
    #[arg(long = "init-y", default_value = "kmeans")]
    pub init_y: InitStrategy,
    #[arg(long)]
    pub ablate_alpha: bool,
    #[arg(long)]
    pub ablate_labeled: bool,
    #[arg(long)]
    pub hard_restrict_novel: bool,
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            max_iter: self.max_iter,
            tol: self.tol,
            seed: self.seed,
            init_y_novel: self.init_y,
            normalize: self.normalize,
            ablate_alpha: self.ablate_alpha,
            ablate_labeled: self.ablate_labeled,
            hard_restrict_novel: self.hard_restrict_novel,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Comma-separated λ1 values; defaults to 1,10,…,1e5.
    #[arg(long, value_delimiter = ',')]
    pub lambda1_grid: Option<Vec<f64>>,
    /// Comma-separated λ2 values; defaults to 1,10,…,1e5.
    #[arg(long, value_delimiter = ',')]
    pub lambda2_grid: Option<Vec<f64>>,
    /// Output directory for per-cell reports and summary.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 6)]
    pub classes: usize,
    #[arg(long, default_value_t = 100)]
    pub per_class: usize,
    /// Comma-separated per-view dimensions.
    #[arg(long, value_delimiter = ',', default_value = "20,30,40")]
    pub dims: Vec<usize>,
    /// Expected distance between two class means in a view.
    #[arg(long, default_value_t = 6.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    /// Comma-separated per-view noise multipliers.
    #[arg(long, value_delimiter = ',')]
    pub view_noise: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// One cluster id per line, one line per unlabeled sample in dataset order.
    #[arg(long)]
    pub assignment: PathBuf,
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Run(args) => cmd_run(&args, out),
        Command::Sweep(args) => cmd_sweep(&args, out),
        Command::Synth(args) => cmd_synth(&args, out),
        Command::Eval(args) => cmd_eval(&args, out),
    }
}

fn stdout_error(e: std::io::Error) -> CliError {
    CliError::io("<stdout>", e)
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<()> {
    let ds = args.data.load()?;
    let cfg = args.solver.config();
    let run = run_experiment(&ds, &cfg)?;
    create_dir(&args.out)?;
    write_atomic(&args.out.join("report.json"), run.report.to_json().as_bytes())?;
    write_atomic(&args.out.join("trace.csv"), trace_csv(&run.fit.result).as_bytes())?;
    let assignment: String = run
        .fit
        .result
        .novel_assignment
        .iter()
        .map(|r| format!("{r}\n"))
        .collect();
    write_atomic(&args.out.join("assignment.csv"), assignment.as_bytes())?;

    let r = &run.report;
    writeln!(
        out,
        "novel set: acc {:.4}  nmi {:.4}  purity {:.4}\n{} iterations ({}), {:.3} s, alpha [{}]\nwrote {}",
        r.metrics.acc,
        r.metrics.nmi,
        r.metrics.purity,
        r.iterations,
        if r.converged { "converged" } else { "iteration limit" },
        r.wall_time,
        r.alpha.iter().map(|a| format!("{a:.3}")).collect::<Vec<_>>().join(", "),
        args.out.display()
    )
    .map_err(stdout_error)
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    let ds = args.data.load()?;
    let cfg = args.solver.config();
    cfg.validate()?;
    let l1 = args.lambda1_grid.clone().unwrap_or_else(default_grid);
    let l2 = args.lambda2_grid.clone().unwrap_or_else(default_grid);
    if l1.is_empty() || l2.is_empty() {
        return Err(CliError::Invalid("empty λ grid".into()));
    }
    create_dir(&args.out)?;
    let cells = run_sweep(&ds, &cfg, &l1, &l2, Some(&args.out));
    write_atomic(&args.out.join("summary.csv"), summary_csv(&cells).as_bytes())?;
    let failed = cells.iter().filter(|c| c.outcome.is_err()).count();
    match best_cell(&cells) {
        Some(best) => {
            let m = best.outcome.as_ref().expect("best cell succeeded");
            writeln!(
                out,
                "{} cells, {failed} failed; best acc {:.4} (nmi {:.4}, purity {:.4}) at lambda1={} lambda2={}",
                cells.len(),
                m.acc,
                m.nmi,
                m.purity,
                best.lambda1,
                best.lambda2
            )
        }
        None => writeln!(out, "{} cells, all failed", cells.len()),
    }
    .map_err(stdout_error)
}

pub fn cmd_synth(args: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    let spec = SyntheticSpec {
        num_classes: args.classes,
        per_class: args.per_class,
        dims: args.dims.clone(),
        separation: args.separation,
        noise: args.noise,
        view_noise: args.view_noise.clone().unwrap_or_default(),
        seed: args.seed,
    };
    let ds = generate_synthetic(&spec)?;
    write_dataset(&ds, &args.out)?;
    writeln!(
        out,
        "wrote {} samples, {} views, {} known / {} novel classes to {}",
        ds.num_samples(),
        ds.num_views(),
        ds.known_classes().len(),
        ds.novel_classes().len(),
        args.out.display()
    )
    .map_err(stdout_error)
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let ds = args.data.load()?;
    let assignment = read_assignment(&args.assignment)?;
    let m = evaluate(&ds, &assignment)?;
    writeln!(out, "acc {}\nnmi {}\npurity {}", m.acc, m.nmi, m.purity).map_err(stdout_error)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from_args<I, T>(args: I, out: &mut dyn Write) -> std::result::Result<(), RunError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(RunError::Usage)?;
    execute(cli, out).map_err(RunError::Failed)
}

#[derive(Debug)]
pub enum RunError {
    /// Bad flags, or `--help` / `--version`.
    Usage(clap::Error),
    Failed(CliError),
}

/// Whether `path` looks like a dataset directory.
pub fn is_dataset_dir(path: &Path) -> bool {
    path.join(crate::io::MANIFEST_NAME).is_file()
}
