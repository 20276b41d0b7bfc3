//! `taxagg`: aggregate flat-classifier scores into taxonomy paths.
//!
//! Exit codes:
//!
//! | code | meaning                                   |
//! |------|-------------------------------------------|
//! | 0    | success                                   |
//! | 2    | bad usage or configuration                |
//! | 3    | input file failed to parse or validate    |
//! | 4    | model construction, inference or fitting  |
//! | 5    | reading or writing a file                 |

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Usage = 2,
    Input = 3,
    Model = 4,
    Io = 5,
}

#[derive(Debug)]
pub struct Failure {
    pub exit: Exit,
    pub error: anyhow::Error,
}

pub type Outcome<T> = Result<T, Failure>;

pub trait Classify<T> {
    fn or_exit(self, exit: Exit) -> Outcome<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn or_exit(self, exit: Exit) -> Outcome<T> {
        self.map_err(|e| Failure { exit, error: e.into() })
    }
}

#[derive(Debug, Parser)]
#[command(name = "taxagg", version, about = "Aggregate flat-classifier scores into taxonomy label paths")]
struct Cli {
    /// Flat `key = value` file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More log output on stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a taxonomy file and print a summary.
    ValidateTaxonomy(ValidateArgs),
    /// Produce a label path per instance.
    Aggregate(AggregateArgs),
    /// Fit observation parameters from gold labels.
    Fit(FitArgs),
    /// Fit observation parameters without labels by EM.
    Em(EmArgs),
    /// Score predictions against gold labels with LCA precision/recall/F1.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic taxonomy, gold labels and score sheets.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub taxonomy: Option<String>,
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// `class weight` lines for leaf priors.
    #[arg(long)]
    pub leaf_weights: Option<String>,
    /// Use this leak everywhere instead of the structural rule.
    #[arg(long)]
    pub leak: Option<f64>,
    /// Prior of parentless nodes when `--leak` is set.
    #[arg(long)]
    pub prior: Option<f64>,
    #[arg(long)]
    pub sigma_floor: Option<f64>,
    #[arg(long)]
    pub max_width: Option<usize>,
    #[arg(long)]
    pub max_dense_parents: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    #[arg(long)]
    pub taxonomy: Option<String>,
    #[arg(long)]
    pub sheets: Option<String>,
    /// `heuristic` or `graphical`.
    #[arg(long)]
    pub method: Option<String>,
    /// Observation parameters (graphical only).
    #[arg(long)]
    pub params: Option<String>,
    /// `entropy` or `marginal`; defaults to entropy for heuristic and
    /// marginal for graphical.
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// `raw` or `distribution`.
    #[arg(long)]
    pub entropy_form: Option<String>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Entry-level classes, one per line; paths back off to the deepest one.
    #[arg(long)]
    pub entry_level: Option<String>,
    /// Cap on alternative root paths listed per terminal class.
    #[arg(long)]
    pub root_path_cap: Option<usize>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub output: Option<String>,
    /// Per-node scores or marginals, one line per instance and class.
    #[arg(long)]
    pub scores_output: Option<String>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub taxonomy: Option<String>,
    #[arg(long)]
    pub sheets: Option<String>,
    #[arg(long)]
    pub gold: Option<String>,
    /// `binormal` or `discrete`.
    #[arg(long)]
    pub kind: Option<String>,
    /// Pseudo-count for the discrete fit.
    #[arg(long)]
    pub smoothing: Option<f64>,
    #[arg(long)]
    pub sigma_floor: Option<f64>,
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct EmArgs {
    #[arg(long)]
    pub taxonomy: Option<String>,
    #[arg(long)]
    pub sheets: Option<String>,
    /// Starting parameters; otherwise fitted from `--gold` if given, else
    /// N(-1, 1) / N(1, 1) on every hook.
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long)]
    pub gold: Option<String>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long)]
    pub trace_output: Option<String>,
    #[arg(long)]
    pub soft_labels_output: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub taxonomy: Option<String>,
    /// `instance class` lines or the output of `aggregate`.
    #[arg(long)]
    pub predictions: Option<String>,
    #[arg(long)]
    pub gold: Option<String>,
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub branching_min: Option<usize>,
    #[arg(long)]
    pub branching_max: Option<usize>,
    #[arg(long)]
    pub dag_prob: Option<f64>,
    #[arg(long)]
    pub classifiers: Option<usize>,
    #[arg(long)]
    pub classes_min: Option<usize>,
    #[arg(long)]
    pub classes_max: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub sigma0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu1: Option<f64>,
    #[arg(long)]
    pub sigma1: Option<f64>,
    #[arg(long)]
    pub jitter: Option<f64>,
    #[arg(long)]
    pub instances: Option<usize>,
    /// Receives taxonomy.tsv, sheets.tsv, gold.tsv and params.tsv.
    #[arg(long)]
    pub out_dir: Option<String>,
}

fn run(cli: Cli) -> Outcome<()> {
    let mut settings = settings::Settings::load(cli.config.as_deref()).or_exit(Exit::Usage)?;
    let result = match cli.command {
        Command::ValidateTaxonomy(a) => commands::validate_taxonomy(&mut settings, a),
        Command::Aggregate(a) => commands::aggregate(&mut settings, a),
        Command::Fit(a) => commands::fit(&mut settings, a),
        Command::Em(a) => commands::em(&mut settings, a),
        Command::Evaluate(a) => commands::evaluate(&mut settings, a),
        Command::Simulate(a) => commands::simulate(&mut settings, a),
    };
    for key in settings.unused() {
        log::warn!("config key `{key}` is not used by this command");
    }
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    // Deliberately not reading RUST_LOG: the tool takes no settings from the environment.
    env_logger::Builder::new().filter_level(level).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.exit as u8)
        }
    }
}
