use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kkq_core::experiment::{
    ensure_writable, run_experiment, write_outputs, ConfigFile, ExperimentConfig, ExperimentError,
    ExperimentKind, ExperimentOutcome, GridProfile,
};

/// Monte Carlo experiments on the quantum noise of the Kramers-Kronig receiver.
#[derive(Debug, Parser)]
#[command(name = "kkq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// SNR and per-quadrant ellipse ratio versus n_s at 10 dB CSPR.
    Table1(CommonArgs),
    /// Ellipse orientation versus CSPR at n_s = 100.
    CsprSweep(CommonArgs),
    /// I/Q variances versus decision phase at 30 dB CSPR.
    PhaseSweep(CommonArgs),
    /// Any experiment described by --config (single run by default).
    Run(CommonArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Profile {
    Paper,
    Reduced,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Flat key = value config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    profile: Option<Profile>,
    /// Symbols per run.
    #[arg(long)]
    symbols: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an SVG scatter per run.
    #[arg(long)]
    svg: bool,
    /// Required for the paper-scale profile.
    #[arg(long)]
    confirm_paper_scale: bool,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    threads: Option<usize>,
}

impl CommonArgs {
    fn overrides(&self) -> ConfigFile {
        ConfigFile {
            seed: self.seed,
            profile: self.profile.map(|p| match p {
                Profile::Paper => GridProfile::Paper,
                Profile::Reduced => GridProfile::Reduced,
            }),
            symbols: self.symbols,
            out: self.out.clone(),
            svg: self.svg.then_some(true),
            confirm_paper_scale: self.confirm_paper_scale.then_some(true),
            ..Default::default()
        }
    }
}

fn resolve(
    kind: Option<ExperimentKind>,
    args: &CommonArgs,
) -> Result<ExperimentConfig, ExperimentError> {
    let file = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    if let (Some(wanted), Some(found)) = (kind, file.kind) {
        if wanted != found {
            return Err(ExperimentError::Config(format!(
                "config kind {} does not match the {} subcommand",
                found.name(),
                wanted.name()
            )));
        }
    }
    let mut raw = file.merged(args.overrides());
    if raw.kind.is_none() {
        raw.kind = Some(kind.unwrap_or(ExperimentKind::SingleRun));
    }
    ExperimentConfig::resolve(raw)
}

fn execute(
    kind: Option<ExperimentKind>,
    args: &CommonArgs,
) -> Result<ExperimentOutcome, ExperimentError> {
    let config = resolve(kind, args)?;
    ensure_writable(&config.out)?;
    let start = Instant::now();
    let outcome = match args.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ExperimentError::Config(format!("thread pool: {e}")))?
            .install(|| run_experiment(&config))?,
        None => run_experiment(&config)?,
    };
    write_outputs(&outcome, start.elapsed().as_secs_f64())?;
    Ok(outcome)
}

fn summarize(outcome: &ExperimentOutcome) {
    let report = &outcome.report;
    for run in &report.runs {
        println!(
            "{}: snr {:.2} (predicted {:.2}), rho {}, clamps {}",
            run.label,
            run.snr,
            run.snr_predicted,
            run.clusters
                .iter()
                .map(|c| format!("{:.3}", c.ellipse.rho))
                .collect::<Vec<_>>()
                .join("/"),
            run.clamp_count
        );
    }
    if let Some(slope) = report.sweep.slope {
        println!("snr slope vs n_s: {slope:.4} (predicted 1.5)");
    }
    for failed in &report.failed_checks {
        println!("FAIL {failed}");
    }
    println!(
        "{}: {} gating checks, {} failed; outputs in {}",
        if report.pass { "PASS" } else { "FAIL" },
        report.gating_checks,
        report.failed_checks.len(),
        outcome.config.out.display()
    );
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Table1(a) => (Some(ExperimentKind::Table1Sweep), a),
        Command::CsprSweep(a) => (Some(ExperimentKind::CsprSweep), a),
        Command::PhaseSweep(a) => (Some(ExperimentKind::DecisionPhaseSweep), a),
        Command::Run(a) => (None, a),
    };
    match execute(kind, args) {
        Ok(outcome) => {
            summarize(&outcome);
            if outcome.pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("kkq: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
