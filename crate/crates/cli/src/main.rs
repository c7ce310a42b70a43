use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use stcmc_core::pipeline::{self, defaults, AnalysisConfig, AnalysisKind, SolverConfig};

#[derive(Parser)]
#[command(name = "stcmc", version, about = "Stability and quasi-local energy of spacelike 2-surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every analysis listed in the config.
    Analyze(RunArgs),
    /// Run only the spectrum analysis.
    Spectrum(RunArgs),
    /// Run only the foliation analysis.
    Foliate(RunArgs),
    /// Run a named verification suite (`all` runs every suite).
    Check(CheckArgs),
}

#[derive(Args)]
struct Overrides {
    /// Icosphere subdivision level.
    #[arg(long)]
    level: Option<u32>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solver seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    suite: String,
    #[command(flatten)]
    overrides: Overrides,
}

fn load(args: &RunArgs, only: Option<AnalysisKind>) -> Result<AnalysisConfig> {
    let mut config = AnalysisConfig::from_file(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))?;
    let o = &args.overrides;
    if let Some(level) = o.level {
        config.surface.level = level;
    }
    if let Some(seed) = o.seed {
        config.solver.seed = seed;
    }
    if let Some(out) = &o.out {
        config.output.dir = out.clone();
    }
    if let Some(kind) = only {
        config.analyses.run = vec![kind];
    }
    config.validate()?;
    Ok(config)
}

fn output_dir(config: &AnalysisConfig, cli_out: Option<&Path>) -> PathBuf {
    match cli_out {
        Some(p) => p.to_path_buf(),
        None if config.output.dir.is_relative() => config.base_dir.join(&config.output.dir),
        None => config.output.dir.clone(),
    }
}

fn run_config(args: &RunArgs, only: Option<AnalysisKind>) -> Result<bool> {
    let config = load(args, only)?;
    let output = pipeline::run(&config)?;
    let dir = output_dir(&config, args.overrides.out.as_deref());
    for path in pipeline::emit(&output, &config.output, &dir)? {
        println!("wrote {}", path.display());
    }
    for outcome in &output.report.analyses {
        match &outcome.error {
            None => println!("{:<16} ok", outcome.analysis.name()),
            Some(e) => println!("{:<16} FAILED: {e}", outcome.analysis.name()),
        }
    }
    Ok(!output.report.failed())
}

fn run_check(args: &CheckArgs) -> Result<bool> {
    let o = &args.overrides;
    let level = o.level.unwrap_or(defaults::LEVEL);
    let seed = o.seed.unwrap_or(defaults::SEED);
    let solver = SolverConfig { seed, ..SolverConfig::default() }.options();
    let report = pipeline::run_suite(&args.suite, level, seed, &solver)?;
    for line in &report.lines {
        println!(
            "{} [{}] {}: value={:.6e} expected={:.6e} tol={:.1e}",
            if line.passed { "PASS" } else { "FAIL" },
            line.suite,
            line.name,
            line.value,
            line.expected,
            line.tolerance
        );
    }
    if let Some(out) = &o.out {
        std::fs::create_dir_all(out)?;
        let path = out.join(format!("check-{}.json", args.suite));
        std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
        println!("wrote {}", path.display());
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("STCMC_LOG", "warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Analyze(a) => run_config(a, None),
        Command::Spectrum(a) => run_config(a, Some(AnalysisKind::Spectrum)),
        Command::Foliate(a) => run_config(a, Some(AnalysisKind::Foliation)),
        Command::Check(c) => run_check(c),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
