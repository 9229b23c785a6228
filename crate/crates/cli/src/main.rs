use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod analyze;
mod run;
mod tools;

/// Learning-to-forecast asset market laboratory.
#[derive(Parser)]
#[command(name = "ltf", version, about)]
struct Cli {
    /// Increase log verbosity (-v, -vv).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment campaign from a JSON config.
    Run(RunArgs),
    /// Analyze the run logs of a campaign directory.
    Analyze(AnalyzeArgs),
    /// Print a summary table across analyzed campaigns.
    Report(ReportArgs),
    /// Ask an agent for one forecast on a frozen history, or run the leakage questions.
    Probe(ProbeArgs),
    /// Label run justifications with a classifier model.
    Classify(ClassifyArgs),
    /// Search run justifications for leakage keywords.
    Scan(ScanArgs),
    /// Agreement between bubble classifiers over a set of runs.
    Grid(GridArgs),
    /// Serve a scripted chat-completions endpoint until interrupted.
    MockServer(MockServerArgs),
}

#[derive(Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for run logs; overrides the config.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Base seed; repeat r runs with seed + r.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub repeats: Option<u32>,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Sampling temperature for every LLM agent.
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Past exchanges kept by every LLM agent.
    #[arg(long)]
    pub memory: Option<usize>,
    #[arg(long, value_enum)]
    pub prompt_variant: Option<Variant>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Variant {
    Neutral,
    Nonlinear,
}

#[derive(Args)]
pub struct AnalysisFlags {
    /// Price a bubble must exceed; defaults to five times the fundamental price.
    #[arg(long)]
    pub bubble_threshold: Option<f64>,
    /// Consecutive periods above the threshold.
    #[arg(long, default_value_t = 3)]
    pub duration: usize,
    /// Mean-price bubble rule, as a multiple of the fundamental price.
    #[arg(long, default_value_t = 2.0)]
    pub mean_multiplier: f64,
    /// Significance level of the growth and bias tests.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Fail on corrupt log lines instead of skipping them.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Campaign directory holding run_NNN.jsonl files.
    pub dir: PathBuf,
    /// Where to write reports; defaults to DIR/analysis.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Row label; defaults to the campaign label or directory name.
    #[arg(long)]
    pub label: Option<String>,
    /// Classifier labels (JSONL) used for the scatter series.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[command(flatten)]
    pub flags: AnalysisFlags,
}

#[derive(Args)]
pub struct ReportArgs {
    /// Analysis or campaign directories, one table row each.
    #[arg(required = true)]
    pub dirs: Vec<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args)]
pub struct ProbeArgs {
    /// Agent spec as JSON.
    #[arg(long)]
    pub agent: PathBuf,
    /// Frozen history as JSON; defaults to the built-in rising history.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Market parameters as JSON.
    #[arg(long)]
    pub market: Option<PathBuf>,
    #[arg(long)]
    pub repeats: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Ask the leakage questions instead of requesting a forecast.
    #[arg(long)]
    pub leakage: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum TaskArg {
    Nonlinear,
    Fundamental,
    Both,
}

#[derive(Args)]
pub struct ClassifyArgs {
    pub dir: PathBuf,
    /// Classifier endpoint settings as JSON.
    #[arg(long)]
    pub classifier: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    pub task: TaskArg,
    /// Defaults to DIR/analysis.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub strict: bool,
}

#[derive(Args)]
pub struct ScanArgs {
    pub dir: PathBuf,
    /// Keyword list, one per line; defaults to the built-in list.
    #[arg(long)]
    pub keywords: Option<PathBuf>,
    /// Write hits as JSONL.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub strict: bool,
}

#[derive(Args)]
pub struct GridArgs {
    #[arg(required = true)]
    pub dirs: Vec<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub strict: bool,
}

#[derive(Args)]
pub struct MockServerArgs {
    #[arg(long)]
    pub script: PathBuf,
    #[arg(long, default_value = "127.0.0.1:0")]
    pub addr: String,
}

/// How a command finished.
pub enum Outcome {
    Success,
    Partial,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Run(a) => run::cmd_run(a),
        Command::Analyze(a) => analyze::cmd_analyze(a),
        Command::Report(a) => analyze::cmd_report(a),
        Command::Probe(a) => tools::cmd_probe(a),
        Command::Classify(a) => tools::cmd_classify(a),
        Command::Scan(a) => tools::cmd_scan(a),
        Command::Grid(a) => tools::cmd_grid(a),
        Command::MockServer(a) => tools::cmd_mock_server(a),
    };
    match result {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
