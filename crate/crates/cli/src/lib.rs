//! Command-line driver: loads datasets, builds oracles, runs diagnostics and
//! writes CSV reports.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | a check failed, or an internal error |
//! | 2 | usage error |
//! | 3 | invalid sample file |
//! | 4 | oracle failure or protocol mismatch |
//! | 5 | evaluation budget or player cap exceeded |
//! | 6 | a sample or dataset lacks what the command needs |
//! | 7 | I/O error |

mod axioms;
mod diagnose;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use harsanyi_core::harsanyi::Axiom;
use harsanyi_core::metrics::Aspect;
use harsanyi_core::Error;

pub use axioms::{random_game, run_suite, CheckSummary, SuiteConfig};
pub use diagnose::{build_oracle, OracleSpec};

pub mod exit {
    pub const OK: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const SCHEMA: i32 = 3;
    pub const ORACLE: i32 = 4;
    pub const BUDGET: i32 = 5;
    pub const PRECONDITION: i32 = 6;
    pub const IO: i32 = 7;
}

pub const CACHE_DIR_ENV: &str = "HARSANYI_CACHE_DIR";
pub const MAX_SAFE_BUDGET: u32 = 20;

#[derive(Debug, Parser)]
#[command(
    name = "harsanyi",
    version,
    about = "Harsanyi-dividend diagnostics for image-text scoring models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the dividend identities and axioms on seeded random games.
    Axioms(AxiomsArgs),
    /// Text-side sensitivities Q for every sample.
    DiagnoseText(RunArgs),
    /// Image-side sensitivities D for every sample.
    DiagnoseImage(RunArgs),
    /// Cross-modal sensitivities for every sample.
    DiagnoseCrossmodal(RunArgs),
    /// Reward and interaction differences with their Pearson correlations.
    Correlate(CorrelateArgs),
    /// Write a synthetic sample file.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct AxiomsArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub games: usize,
    #[arg(long, default_value_t = 2)]
    pub min_players: usize,
    #[arg(long, default_value_t = 8)]
    pub max_players: usize,
    #[arg(long, hide = true, value_parser = parse_axiom)]
    pub inject_fault: Option<Axiom>,
}

fn parse_axiom(s: &str) -> Result<Axiom, String> {
    Axiom::ALL
        .into_iter()
        .find(|a| a.name() == s)
        .ok_or_else(|| format!("unknown axiom {s:?}"))
}

#[derive(Debug, Args, Clone)]
pub struct RunArgs {
    /// multilinear[:<seed>], toy[:<seed>] or remote:<url>
    #[arg(long)]
    pub oracle: String,
    #[arg(long)]
    pub dataset: PathBuf,
    /// CSV report path.
    #[arg(long)]
    pub out: PathBuf,
    /// Dataset name written to the report; defaults to the file stem.
    #[arg(long)]
    pub dataset_name: Option<String>,
    /// Largest lattice, as a power of two, evaluated in one go.
    #[arg(long, default_value_t = MAX_SAFE_BUDGET)]
    pub budget: u32,
    #[arg(long)]
    pub unsafe_budget: bool,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Oracle seed when the oracle spec carries none.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Abort on the first invalid sample instead of skipping it.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub include_empty_in_normalizer: bool,
    #[arg(long, env = CACHE_DIR_ENV)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Text,
    Image,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[arg(long, value_enum)]
    pub side: SideArg,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AspectArg {
    Relation,
    Attribute,
    Object,
}

impl From<AspectArg> for Aspect {
    fn from(a: AspectArg) -> Self {
        match a {
            AspectArg::Relation => Aspect::Relation,
            AspectArg::Attribute => Aspect::Attribute,
            AspectArg::Object => Aspect::Object,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value_t = AspectArg::Relation)]
    pub aspect: AspectArg,
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Background words added to every caption.
    #[arg(long, default_value_t = 0)]
    pub filler_tokens: usize,
    /// Background regions added to every image.
    #[arg(long, default_value_t = 0)]
    pub filler_regions: usize,
    #[arg(long)]
    pub no_second_image: bool,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Schema { .. } => exit::SCHEMA,
        Error::OracleFailure { .. } | Error::ProtocolMismatch(_) => exit::ORACLE,
        Error::BudgetExceeded { .. } | Error::PlayerSetTooLarge { .. } => exit::BUDGET,
        Error::MissingRole { .. }
        | Error::MissingRegion { .. }
        | Error::MissingCounterpart { .. }
        | Error::DegenerateNormalizer { .. }
        | Error::EmptyDataset
        | Error::EmptyReport
        | Error::InconsistentAspect { .. }
        | Error::ZeroVariance
        | Error::SeriesLength { .. } => exit::PRECONDITION,
        Error::Io(_) | Error::Csv(_) => exit::IO,
        _ => exit::CHECK_FAILED,
    }
}

/// Runs a parsed command. Data goes to `out`, progress and errors to `err`.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Axioms(a) => return cmd_axioms(&a, out, err),
        Command::DiagnoseText(r) => diagnose::cmd_diagnose(&r, diagnose::Mode::Text, out, err),
        Command::DiagnoseImage(r) => diagnose::cmd_diagnose(&r, diagnose::Mode::Image, out, err),
        Command::DiagnoseCrossmodal(r) => diagnose::cmd_diagnose(&r, diagnose::Mode::CrossModal, out, err),
        Command::Correlate(c) => {
            let mode = match c.side {
                SideArg::Text => diagnose::Mode::CorrelateText,
                SideArg::Image => diagnose::Mode::CorrelateImage,
            };
            diagnose::cmd_diagnose(&c.run, mode, out, err)
        }
        Command::Generate(g) => cmd_generate(&g, err),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            exit::USAGE
        }
        Err(CliError::Core(e)) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            code
        }
    }
}

#[derive(Debug)]
pub(crate) enum CliError {
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

fn cmd_axioms(args: &AxiomsArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if args.min_players > args.max_players || args.max_players > 16 {
        let _ = writeln!(err, "error: need min-players <= max-players <= 16");
        return exit::USAGE;
    }
    let start = std::time::Instant::now();
    let summaries = run_suite(SuiteConfig {
        seed: args.seed,
        games: args.games,
        min_players: args.min_players,
        max_players: args.max_players,
        fault: args.inject_fault,
    });
    let mut text = format!(
        "{:<18} {:>5} {:>12} {:>20}  status\n",
        "check", "games", "max_residual", "tolerance"
    );
    for s in &summaries {
        text.push_str(&format!(
            "{:<18} {:>5} {:>12.3e} {:>20}  {}\n",
            s.name,
            s.runs,
            s.max_residual,
            s.tolerance,
            if s.passed() { "pass" } else { "FAIL" }
        ));
    }
    let failed: Vec<&str> = summaries.iter().filter(|s| !s.passed()).map(|s| s.name).collect();
    let _ = out.write_all(text.as_bytes());
    let _ = writeln!(err, "checked {} games in {:.2?}", args.games, start.elapsed());
    if failed.is_empty() {
        exit::OK
    } else {
        let _ = writeln!(err, "failed: {}", failed.join(", "));
        exit::CHECK_FAILED
    }
}

fn cmd_generate(args: &GenerateArgs, err: &mut dyn Write) -> Result<i32, CliError> {
    use harsanyi_core::dataset::{synthetic_samples, write_samples, SyntheticConfig};
    let mut config = SyntheticConfig::new(args.seed, args.samples, args.aspect.into());
    config.filler_tokens = args.filler_tokens;
    config.filler_regions = args.filler_regions;
    config.second_image = !args.no_second_image;
    if 4 + args.filler_tokens > harsanyi_core::MAX_PLAYERS || 3 + args.filler_regions > harsanyi_core::MAX_PLAYERS {
        return Err(CliError::Usage("too many filler players".into()));
    }
    let samples = synthetic_samples(config);
    write_samples(&args.out, &samples)?;
    writeln!(err, "wrote {} samples to {}", samples.len(), args.out.display())?;
    Ok(exit::OK)
}
