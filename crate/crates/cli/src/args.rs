use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commitment_core::ess::EssRule;
use commitment_core::finite_pop::CooperationMeasure;
use commitment_core::{Axis, Regime};

#[derive(Parser, Debug)]
#[command(
    name = "commitment",
    version,
    about = "Commitment formation with institutional reward and punishment in the one-shot Prisoner's Dilemma",
    long_about = "Payoff matrices, ESS census, small-mutation stationary distributions, risk dominance, \
parameter sweeps and Monte Carlo runs for the eight commitment strategies ACC, ACD, ADC, ADD, NCC, NCD, NDC, NDD.\n\n\
Symbols: u per-capita incentive budget, ε commitment cost (each committed player pays ε/2), \
α fraction of u spent on rewarding participation, χ participation-error probability, \
N population size, β intensity of selection."
)]
pub struct Cli {
    #[command(flatten)]
    pub run: RunArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Directory for output files and the run log
    #[arg(
        long,
        global = true,
        help_heading = "Run",
        env = "COMMITMENT_OUT_DIR",
        default_value = "results"
    )]
    pub out_dir: PathBuf,

    /// Output file format
    #[arg(long, global = true, help_heading = "Run", value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Worker threads (default: available parallelism)
    #[arg(long, global = true, help_heading = "Run")]
    pub threads: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write the 8×8 row-player payoff matrix
    PayoffMatrix(ModelArgs),
    /// Count ESS verdicts over a (u, ε, α, χ) grid
    EssScan(EssScanArgs),
    /// Stationary distribution of the small-mutation chain and the cooperation level
    Stationary(StationaryArgs),
    /// Pairwise risk dominance and the closed-form ACD cost thresholds
    RiskDominance(ModelArgs),
    /// Parameter sweeps from a TOML config and/or --set overrides
    Sweep(SweepArgs),
    /// Agent-based simulation with mutation and Fermi imitation
    Montecarlo(MonteCarloArgs),
}

#[derive(Args, Debug, Clone)]
pub struct GameArgs {
    /// Temptation T [default: 2]
    #[arg(
        long = "t",
        help_heading = "Game",
        value_name = "T",
        allow_hyphen_values = true
    )]
    pub t: Option<f64>,
    /// Reward for mutual cooperation R [default: 1]
    #[arg(
        long = "r",
        help_heading = "Game",
        value_name = "R",
        allow_hyphen_values = true
    )]
    pub r: Option<f64>,
    /// Punishment for mutual defection P [default: 0]
    #[arg(
        long = "p",
        help_heading = "Game",
        value_name = "P",
        allow_hyphen_values = true
    )]
    pub p: Option<f64>,
    /// Sucker's payoff S [default: -1]
    #[arg(
        long = "s",
        help_heading = "Game",
        value_name = "S",
        allow_hyphen_values = true
    )]
    pub s: Option<f64>,
    /// Donation-game benefit b (sets T=b, R=b-c, P=0, S=-c)
    #[arg(long = "b", value_name = "b", help_heading = "Game", requires = "cost", conflicts_with_all = ["t", "r", "p", "s"])]
    pub benefit: Option<f64>,
    /// Donation-game cost c
    #[arg(
        long = "c",
        value_name = "c",
        help_heading = "Game",
        requires = "benefit"
    )]
    pub cost: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    #[command(flatten)]
    pub game: GameArgs,

    /// Incentive regime
    #[arg(long, default_value = "reward", value_parser = parse_regime)]
    pub regime: Regime,

    /// Per-capita incentive budget u (default 2, or 0 without a policy)
    #[arg(long = "u", value_name = "u")]
    pub u: Option<f64>,

    /// Fraction α of the budget spent on rewarding participation
    #[arg(long, value_name = "α", default_value_t = 0.0)]
    pub alpha: f64,

    /// Commitment cost ε, shared as ε/2 per committed player
    #[arg(long, value_name = "ε", default_value_t = 0.5)]
    pub eps: f64,

    /// Participation-error probability χ
    #[arg(long, value_name = "χ", default_value_t = 0.0)]
    pub chi: f64,
}

#[derive(Args, Debug, Clone)]
pub struct PopArgs {
    /// Population size N
    #[arg(long = "n", value_name = "N", default_value_t = 100)]
    pub n: usize,

    /// Intensity of selection β
    #[arg(long, value_name = "β", default_value_t = 0.1)]
    pub beta: f64,
}

#[derive(Args, Debug)]
pub struct StationaryArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    #[command(flatten)]
    pub pop: PopArgs,

    /// How cooperation is scored under participation errors
    #[arg(long, default_value = "realized", value_parser = parse_measure)]
    pub coop_measure: CooperationMeasure,

    /// Also write the 8×8 transition matrix
    #[arg(long)]
    pub transitions: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum RegimeChoice {
    Reward,
    Punishment,
    Both,
}

impl RegimeChoice {
    pub fn regimes(self) -> Vec<Regime> {
        match self {
            RegimeChoice::Reward => vec![Regime::Reward],
            RegimeChoice::Punishment => vec![Regime::Punishment],
            RegimeChoice::Both => vec![Regime::Reward, Regime::Punishment],
        }
    }
}

#[derive(Args, Debug)]
pub struct EssScanArgs {
    #[command(flatten)]
    pub game: GameArgs,

    /// Regime(s) to scan
    #[arg(long, value_enum, default_value_t = RegimeChoice::Both)]
    pub regime: RegimeChoice,

    /// Budget axis u as start:stop:step
    #[arg(long, value_name = "u", default_value = "0:3:0.05", value_parser = parse_axis)]
    pub u_axis: Axis,

    /// Cost axis ε as start:stop:step
    #[arg(long, value_name = "ε", default_value = "0:3:0.05", value_parser = parse_axis)]
    pub eps_axis: Axis,

    /// Participation-share axis α as start:stop:step
    #[arg(long, value_name = "α", default_value = "0:1:0.05", value_parser = parse_axis)]
    pub alpha_axis: Axis,

    /// Participation-error axis χ as start:stop:step
    #[arg(long, value_name = "χ", default_value = "0:0.2:0.02", value_parser = parse_axis)]
    pub chi_axis: Axis,

    /// How an equal-fitness mutant is treated
    #[arg(long, default_value = "classical", value_parser = parse_rule)]
    pub ess_rule: EssRule,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    /// Frequencies, cooperation and ESS flags at every grid point
    Grid,
    /// Reward minus punishment cooperation over the u and ε axes
    CoopDifference,
    /// Best α on a 0..1 grid at every remaining grid point
    OptimalAlpha,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// TOML sweep config
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Override a parameter: name=value or name=start:stop:step
    /// (names: u, eps, alpha, chi, N, beta)
    #[arg(long = "set", value_name = "NAME=VALUE")]
    pub set: Vec<String>,

    /// Regimes, comma separated (nopolicy, reward, punishment)
    #[arg(long, value_delimiter = ',', value_parser = parse_regime)]
    pub regimes: Vec<Regime>,

    /// Outputs, comma separated (strategy_frequencies, cooperation, ess_flags)
    #[arg(long, value_delimiter = ',')]
    pub outputs: Vec<String>,

    /// Swept parameters from slowest to fastest varying
    #[arg(long, value_delimiter = ',')]
    pub axis_order: Vec<String>,

    /// What to compute over the grid
    #[arg(long, value_enum)]
    pub analysis: Option<Analysis>,

    /// Search step for α in optimal-alpha mode
    #[arg(long, value_name = "α-step")]
    pub alpha_step: Option<f64>,

    /// How cooperation is scored under participation errors
    #[arg(long, value_parser = parse_measure)]
    pub coop_measure: Option<CooperationMeasure>,

    #[command(flatten)]
    pub game: GameArgs,
}

#[derive(Args, Debug)]
pub struct MonteCarloArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    #[command(flatten)]
    pub pop: PopArgs,

    /// Mutation probability μ per update
    #[arg(long, value_name = "μ", default_value_t = 1e-3)]
    pub mu: f64,

    /// Update steps per replicate
    #[arg(long, default_value_t = 10_000_000)]
    pub steps: u64,

    /// Updates discarded before averaging (default: 10% of steps)
    #[arg(long)]
    pub burn_in: Option<u64>,

    /// Seed of the first replicate; replicate k uses seed + k
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Independent replicates, pooled into one estimate
    #[arg(long, default_value_t = 1)]
    pub replicates: u64,

    /// Batches for the batch-means standard error
    #[arg(long, default_value_t = commitment_core::montecarlo::DEFAULT_BATCHES)]
    pub batches: usize,

    /// Initial population: a strategy label (all agents) or "uniform"
    #[arg(long, default_value = "NDD")]
    pub initial: String,

    /// Record strategy counts every K updates of the first replicate
    #[arg(long, value_name = "K")]
    pub trajectory: Option<u64>,
}

fn parse_regime(s: &str) -> Result<Regime, String> {
    s.parse().map_err(|e: commitment_core::Error| e.to_string())
}

fn parse_measure(s: &str) -> Result<CooperationMeasure, String> {
    s.parse().map_err(|e: commitment_core::Error| e.to_string())
}

fn parse_rule(s: &str) -> Result<EssRule, String> {
    s.parse().map_err(|e: commitment_core::Error| e.to_string())
}

fn parse_axis(s: &str) -> Result<Axis, String> {
    s.parse().map_err(|e: commitment_core::Error| e.to_string())
}
