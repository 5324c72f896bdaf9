use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use urank_cli::config;
use urank_cli::runner;

/// Experiment harness for pairwise ranking estimators: seeded, config-driven
/// runs with CSV/JSON outputs under `<out>/<subcommand>/<config-hash>/`.
#[derive(Parser)]
#[command(name = "urank", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a dataset from a synthetic model and write it out.
    Generate(RunArgs),
    /// Fit a scorer (boosting or kernel descent) and log the training path.
    Train(RunArgs),
    /// Score a trained or inline scorer on a dataset.
    Eval(RunArgs),
    /// Excess-risk decay of empirical minimization across sample sizes.
    Rates(RunArgs),
    /// Pooled-pairs vs split-sample estimator variance comparison.
    Variance(RunArgs),
    /// Orthogonal decomposition of a pair kernel's U-statistic.
    Decompose(RunArgs),
    /// Empirical tails against closed-form bound curves.
    Bounds(RunArgs),
    /// Empirical (and exact, when a model is given) ROC curve and AUC.
    Roc(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON config document.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output root directory (default `runs`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overwrite an existing result for the same effective config.
    #[arg(long)]
    force: bool,
    /// Worker threads for replicate fan-out.
    #[arg(long, env = "URANK_JOBS")]
    jobs: Option<usize>,
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Generate(_) => "generate",
            Cmd::Train(_) => "train",
            Cmd::Eval(_) => "eval",
            Cmd::Rates(_) => "rates",
            Cmd::Variance(_) => "variance",
            Cmd::Decompose(_) => "decompose",
            Cmd::Bounds(_) => "bounds",
            Cmd::Roc(_) => "roc",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Cmd::Generate(a)
            | Cmd::Train(a)
            | Cmd::Eval(a)
            | Cmd::Rates(a)
            | Cmd::Variance(a)
            | Cmd::Decompose(a)
            | Cmd::Bounds(a)
            | Cmd::Roc(a) => a,
        }
    }
}

fn run(cmd: &Cmd) -> urank::Result<()> {
    let args = cmd.args();
    if let Some(jobs) = args.jobs {
        // Ignore the error if a pool already exists (e.g. under a test
        // harness); the run stays correct either way.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let text = std::fs::read_to_string(&args.config)?;
    let doc = config::parse_doc(&text)?;
    let parsed = config::build(&doc, cmd.name(), args.seed)?;
    let started = Instant::now();
    let output = runner::execute(&parsed)?;
    let wall_ms = started.elapsed().as_millis();
    let out_root = args.out.clone().unwrap_or_else(|| PathBuf::from("runs"));
    let paths = runner::write_run(&out_root, &output, wall_ms, args.force)?;
    println!("{}", paths.dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(runner::exit_code(&e) as u8)
        }
    }
}
