use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod output;
mod suites;

use config::Suite;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "conformal2d",
    version,
    about = "Verification suites, envelopes, moving spheres and radial solves"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run named verification suites and write a JSON report.
    Verify(VerifyArgs),
    /// ε-lower envelope of a radial profile.
    Envelope(commands::EnvelopeArgs),
    /// Shooting solve of f(λ(A^u)) = 1 for a radial u.
    SolveRadial(commands::SolveArgs),
    /// Critical moving-sphere radius and bubble fit at a point.
    MovingSpheres(commands::MovingSpheresArgs),
    /// Summarise and merge existing JSON reports.
    Report(commands::ReportArgs),
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Suites to run (repeat or comma-separate).
    #[arg(long, value_enum, value_delimiter = ',')]
    suite: Vec<Suite>,
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance for the sampled checks (default per suite).
    #[arg(long)]
    tol: Option<f64>,
    /// JSON configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn verify(args: VerifyArgs) -> Result<bool, CliError> {
    let mut cfg = match &args.config {
        Some(p) => config::SuiteConfig::load(p)?,
        None => config::SuiteConfig::default(),
    };
    if !args.suite.is_empty() {
        cfg.suites = args.suite;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if args.tol.is_some() {
        cfg.tol = args.tol;
    }
    if args.out.is_some() {
        cfg.out = args.out;
    }
    cfg.validate()?;

    let mut checks = Vec::new();
    let mut details = std::collections::BTreeMap::new();
    let suites = cfg.expanded_suites();
    for s in &suites {
        let o = suites::run(*s, &cfg);
        checks.extend(o.checks);
        details.insert(s.name().to_string(), o.details);
    }
    details.insert(
        "suites".into(),
        serde_json::json!(suites.iter().map(|s| s.name()).collect::<Vec<_>>()),
    );
    let report = output::Report::new("verify", Some(cfg.seed), checks, details);
    report.emit(cfg.out.as_deref())?;
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Verify(a) => verify(a),
        Command::Envelope(a) => commands::envelope(a),
        Command::SolveRadial(a) => commands::solve_radial(a),
        Command::MovingSpheres(a) => commands::moving_spheres(a),
        Command::Report(a) => commands::report(a),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("conformal2d: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
