//! `optlab` — experiment runner for the optimization laboratory.
//!
//! Exit codes: 0 success, 1 config error, 2 runtime error (partial output
//! is preserved when a grid fails midway).

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use optlab::harness::{
    estimate_norms_cmd, run_convergence_sweep, run_invariance_suite, run_quadratic_table,
    write_invariance, write_norms, write_sweep, write_table1, ExperimentConfig, ExperimentKind,
};
use optlab::probes::bound_report;

#[derive(Parser)]
#[command(
    name = "optlab",
    version,
    about = "Blockwise-Adam optimization experiments: rotated quadratics, invariance checks, Hessian-norm probes, convergence bounds"
)]
struct Cli {
    /// Worker threads for grid execution (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Print progress to stderr.
    #[arg(long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rotated-quadratic table: Hessian geometry next to tuned final losses.
    Table1 {
        /// JSON experiment config; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for CSV rows and JSON metadata.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed override (replaces the config's seed list).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Convergence sweep: empirical min ‖∇L‖₁ against the rate bounds.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Invariance suite: rotations vs permutations across optimizers.
    Invariance {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hessian norm measurements for the configured problem.
    Norms {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the convergence bounds and print the report as JSON.
    Bounds {
        #[arg(long)]
        config: PathBuf,
    },
}

enum AppError {
    Config(String),
    Runtime(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("optlab: could not configure thread pool: {e}");
        }
    }
    let verbose = cli.verbose;
    match execute(cli.command, verbose) {
        Ok(cell_errors) => {
            if cell_errors > 0 {
                eprintln!("optlab: {cell_errors} grid cell(s) failed; partial output preserved");
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(AppError::Config(msg)) => {
            eprintln!("optlab: config error: {msg}");
            ExitCode::from(1)
        }
        Err(AppError::Runtime(msg)) => {
            eprintln!("optlab: runtime error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command, verbose: bool) -> Result<usize, AppError> {
    match command {
        Command::Table1 { config, out, seed } => {
            let mut cfg = load_config(config.as_deref(), ExperimentKind::QuadraticTable)?;
            if let Some(s) = seed {
                cfg.seeds = vec![s];
            }
            let out = resolve_out(&cfg, out)?;
            let start = Instant::now();
            if verbose {
                eprintln!(
                    "table1: {} rotation(s) × {} optimizer cell(s) × {} lr(s), T = {}, seeds {:?}",
                    cfg.rotations.len(),
                    cfg.optimizers.len(),
                    cfg.lr_grid.len(),
                    cfg.steps,
                    cfg.seeds
                );
            }
            let result = run_quadratic_table(&cfg).map_err(runtime)?;
            write_table1(&out, &result).map_err(runtime)?;
            if verbose {
                eprintln!(
                    "table1: {} rows, {} cells in {:.1?} → {}",
                    result.rows.len(),
                    result.cells.len(),
                    start.elapsed(),
                    out.display()
                );
            }
            for cell in &result.cells {
                println!(
                    "{:8} b1={:<4} b2={:<5} {:10} t={:<5} norm11/d={:<12.6} spectral={:<10.6} lr*={:<10} loss={:.6e}",
                    cell.optimizer,
                    cell.beta1,
                    cell.beta2,
                    cell.rotation_kind,
                    cell.rotation_t.map(|t| t.to_string()).unwrap_or_default(),
                    cell.norm11_over_d,
                    cell.spectral_norm,
                    cell.best_lr,
                    cell.final_loss,
                );
            }
            Ok(result.errors.len())
        }
        Command::Sweep { config, out } => {
            let cfg = load_config(config.as_deref(), ExperimentKind::ConvergenceSweep)?;
            let out = resolve_out(&cfg, out)?;
            let result = run_convergence_sweep(&cfg).map_err(runtime)?;
            write_sweep(&out, &result).map_err(runtime)?;
            for (t, emp, bound) in result.mean_by_t() {
                println!(
                    "T={t:<6} mean min‖∇L‖₁ = {emp:.6e}  bound = {bound:.6e}  {}",
                    if emp <= bound { "ok" } else { "VIOLATED" }
                );
            }
            println!(
                "log-log slope: {:.4}  violations: {}",
                result.slope,
                result.violations()
            );
            Ok(result.errors.len())
        }
        Command::Invariance { config, out } => {
            let cfg = load_config(config.as_deref(), ExperimentKind::InvarianceSuite)?;
            let out = resolve_out(&cfg, out)?;
            let result = run_invariance_suite(&cfg).map_err(runtime)?;
            write_invariance(&out, &result).map_err(runtime)?;
            let required: Vec<_> = result.rows.iter().filter(|r| r.required).collect();
            let failed = required.iter().filter(|r| !r.passed).count();
            for row in &result.rows {
                if verbose || !row.passed {
                    println!(
                        "{:8} × {:<15} ({}) d={:<3} deviation={:.3e} threshold={:.0e} {}",
                        row.optimizer,
                        row.transform,
                        row.noise,
                        row.dim,
                        row.deviation,
                        row.threshold,
                        if row.passed { "pass" } else { "FAIL" }
                    );
                }
            }
            println!(
                "invariance: {}/{} required checks passed",
                required.len() - failed,
                required.len()
            );
            Ok(0)
        }
        Command::Norms { config, out } => {
            let cfg = load_config(config.as_deref(), ExperimentKind::NormEstimate)?;
            let out = resolve_out(&cfg, out)?;
            let result = estimate_norms_cmd(&cfg).map_err(runtime)?;
            write_norms(&out, &result).map_err(runtime)?;
            for row in &result.rows {
                println!(
                    "{:26} {:10} t={:<6} {:.8e}",
                    row.metric,
                    row.rotation_kind,
                    row.rotation_t.map(|t| t.to_string()).unwrap_or_default(),
                    row.value
                );
            }
            Ok(0)
        }
        Command::Bounds { config } => {
            let cfg = load_config(Some(&config), ExperimentKind::BoundCheck)?;
            let inputs = cfg
                .bound_inputs
                .ok_or_else(|| AppError::Config("bound_check needs bound_inputs".into()))?;
            let report = bound_report(&inputs).map_err(runtime)?;
            let text = serde_json::to_string_pretty(&report)
                .map_err(|e| AppError::Runtime(e.to_string()))?;
            println!("{text}");
            Ok(0)
        }
    }
}

fn load_config(
    path: Option<&Path>,
    kind: ExperimentKind,
) -> Result<ExperimentConfig, AppError> {
    let cfg = match path {
        Some(p) => ExperimentConfig::from_file(p).map_err(|e| AppError::Config(e.to_string()))?,
        None => ExperimentConfig::default(),
    };
    cfg.validate(kind)
        .map_err(|e| AppError::Config(e.to_string()))?;
    Ok(cfg)
}

fn resolve_out(cfg: &ExperimentConfig, cli_out: Option<PathBuf>) -> Result<PathBuf, AppError> {
    cli_out
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| AppError::Config("no output directory: pass --out or set output_dir".into()))
}

fn runtime(e: optlab::Error) -> AppError {
    AppError::Runtime(e.to_string())
}
