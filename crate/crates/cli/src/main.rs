//! `regmech`: license queries, market simulations, betting runs and experiments.
//!
//! Exit codes: 0 on success, 2 on argument, parse or config errors (and
//! refused overwrites), 1 on runtime failures such as optimizer
//! non-convergence.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "regmech", version, about = "Regulation mechanisms for AI model licensing")]
struct Cli {
    /// Print diagnostics to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// License queries.
    #[command(subcommand)]
    License(LicenseCommand),
    /// Market simulations.
    #[command(subcommand)]
    Market(MarketCommand),
    /// Betting-license runs.
    #[command(subcommand)]
    Betting(BettingCommand),
    /// Run a scenario: simplex_gaming, fairness, chi2_strategic or synthetic_spurious.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Subcommand)]
enum LicenseCommand {
    /// Optimal risk-neutral and risk-averse licenses for one provider type.
    Optimal(LicenseArgs),
}

#[derive(Debug, Subcommand)]
enum MarketCommand {
    /// Participation and classification for a provider population.
    Simulate(MarketArgs),
}

#[derive(Debug, Subcommand)]
enum BettingCommand {
    /// One seeded betting-license trajectory.
    Run(BettingArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overwrite existing output files.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct LicenseArgs {
    /// Credal set JSON: {"space": [...], "vertices": [[...], ...]}.
    #[arg(long)]
    pub credal: PathBuf,
    /// Query JSON: {"provider": [...], "params": {"C": .., "R": ..}}.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Provider type as comma-separated probabilities (overrides the config).
    #[arg(long, value_delimiter = ',')]
    pub provider: Option<Vec<f64>>,
    /// Entry fee C (overrides the config).
    #[arg(long)]
    pub fee: Option<f64>,
    /// Market cap R (overrides the config).
    #[arg(long)]
    pub cap: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct MarketArgs {
    /// Credal set JSON.
    #[arg(long)]
    pub credal: PathBuf,
    /// Market JSON: providers, requirement, mechanism and params.
    #[arg(long)]
    pub config: PathBuf,
    /// Seed for the betting mechanism (overrides the config).
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BettingArgs {
    /// Betting JSON: source distribution, metric, threshold and params.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    pub scenario: String,
    /// Partial experiment config; missing fields take the scenario defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::License(LicenseCommand::Optimal(a)) => commands::license(a, cli.verbose),
        Command::Market(MarketCommand::Simulate(a)) => commands::market(a, cli.verbose),
        Command::Betting(BettingCommand::Run(a)) => commands::betting(a, cli.verbose),
        Command::Experiment(a) => commands::experiment(a, cli.verbose),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}
