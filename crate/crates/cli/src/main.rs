use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use spinfactor_cli::{run_experiment, Command, ExperimentConfig, Format, IsometrySpec};

/// Run one seeded spin-factor experiment and emit its report.
///
/// Exit status: 0 when every check passes, 1 when a check fails, 2 on error.
#[derive(Debug, Parser)]
#[command(name = "spinfactor", version)]
struct Args {
    /// JSON config file; flags given on the command line override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// axioms | fixpoint-orthogonal | fixpoint-sliver | weakfp | dynamics | density
    #[arg(long)]
    command: Option<Command>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    t: Option<f64>,
    /// identity | neg-identity | cyclic-shift(m) | permutation(p1,...,pn) |
    /// plane-rotation(i,j,phi) | matrix-file(path); indices are 1-based
    #[arg(long)]
    isometry: Option<IsometrySpec>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    /// Contraction factor applied after the map in `dynamics`.
    #[arg(long)]
    contraction: Option<f64>,
    /// Perturbation radius for `density`.
    #[arg(long)]
    eps: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
}

fn build_config(args: Args) -> Result<ExperimentConfig, Box<dyn std::error::Error>> {
    let mut cfg = match (&args.config, args.command) {
        (Some(path), _) => ExperimentConfig::from_json_file(path)?,
        (None, Some(command)) => ExperimentConfig::new(command),
        (None, None) => return Err("either --command or --config is required".into()),
    };
    if let Some(v) = args.command {
        cfg.command = v;
    }
    macro_rules! overlay {
        ($($field:ident <- $arg:ident),*) => {
            $(if let Some(v) = args.$arg { cfg.$field = v; })*
        };
    }
    overlay!(dim <- dim, seed <- seed, t <- t, isometry <- isometry, tol <- tol, max_iter <- max_iter,
        samples <- samples, contraction <- contraction, eps <- eps, format <- format);
    if let Some(out) = args.out {
        cfg.out_path = Some(out);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: Args) -> Result<bool, Box<dyn std::error::Error>> {
    let cfg = build_config(args)?;
    let report = run_experiment(&cfg)?;
    let text = report.render(cfg.format)?;
    match &cfg.out_path {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    for check in &report.checks {
        eprintln!(
            "{} {}: {:e} (threshold {:e})",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.value,
            check.threshold
        );
    }
    Ok(report.all_pass())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
