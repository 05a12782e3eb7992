//! `carefree`: compile MSO node properties into counting message-passing automata,
//! simulate them, and check them against brute-force evaluators.
//!
//! Exit codes: 0 success, 1 disagreement or property failure, 2 input error,
//! 3 resource budget exhausted.

mod cmd;

use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use carefree::automata::DEFAULT_STATE_BUDGET;
use carefree::compiler::DEFAULT_MINIMIZE_BUDGET;
use carefree::harness::{Property, Stage};
use clap::{Args, Parser, Subcommand};
use tracing_subscriber::EnvFilter;

#[derive(Parser, Debug)]
#[command(name = "carefree", version, about = "MSO to counting message-passing automata, with simulators and differential checks")]
struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Shared {
    /// Largest tree size for exhaustive or random corpora.
    #[arg(long, default_value_t = 6)]
    pub max_nodes: usize,
    /// Rounds simulated before giving up (or truncating, for `run`).
    #[arg(long, default_value_t = 1000)]
    pub max_rounds: usize,
    /// Cap on interned states and aggregators per automaton.
    #[arg(long, default_value_t = DEFAULT_STATE_BUDGET)]
    pub state_budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for report and trace files; stdout only if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct FormulaArgs {
    /// File holding an MSO node property in the designated variable `x`.
    #[arg(long, conflicts_with = "gml")]
    pub formula: Option<PathBuf>,
    /// Inline graded modal formula; compiled through its MSO translation.
    #[arg(long)]
    pub gml: Option<String>,
    /// The `--formula` file holds a graded modal formula.
    #[arg(long, requires = "formula")]
    pub from_gml: bool,
    #[arg(long, default_value_t = Stage::FixedPoint)]
    pub stage: Stage,
    /// Quotient intermediate automata up to this many states and aggregators (0 disables).
    #[arg(long, default_value_t = DEFAULT_MINIMIZE_BUDGET)]
    pub minimize_budget: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compile a formula and print per-stage statistics.
    Compile {
        #[command(flatten)]
        formula: FormulaArgs,
        #[command(flatten)]
        shared: Shared,
    },
    /// Compare the compiled automaton with the oracle on a tree corpus.
    Check {
        #[command(flatten)]
        formula: FormulaArgs,
        #[command(flatten)]
        shared: Shared,
        /// Draw N random trees (seeded by --seed) instead of enumerating all.
        #[arg(long)]
        random: Option<usize>,
        /// Largest tree on which the oracle enumerates sets.
        #[arg(long, default_value_t = 12)]
        oracle_cap: usize,
        #[arg(long, hide = true)]
        swap_verdicts: bool,
    },
    /// Print the trace of an automaton (or its GNN embedding) on one tree.
    Run {
        #[command(flatten)]
        formula: FormulaArgs,
        #[command(flatten)]
        shared: Shared,
        /// Atomic automaton instead of a formula: `P(y)`, `E(y,z)`, `y = z` or `proper y,z`.
        #[arg(long, conflicts_with_all = ["formula", "gml"])]
        atomic: Option<String>,
        /// Tree file in the `({labels} child...)` format.
        #[arg(long)]
        tree: PathBuf,
        /// Run the GNN embedding of the (deterministic) automaton instead.
        #[arg(long)]
        embed: bool,
    },
    /// Seeded property-based fuzzing of the library's invariants.
    Fuzz {
        #[command(flatten)]
        shared: Shared,
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        /// Restrict to these properties (repeatable); all by default.
        #[arg(long)]
        property: Vec<Property>,
    },
    /// Evaluate a GMSC program on a tree, or check its compilation on a corpus.
    Gmsc {
        #[arg(long)]
        program: PathBuf,
        /// Print the program's trace on this tree; otherwise check a corpus.
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long)]
        random: Option<usize>,
        #[command(flatten)]
        shared: Shared,
        #[arg(long, hide = true)]
        swap_verdicts: bool,
    },
    /// Run an R-simple GNN from a JSON configuration on a tree.
    Gnn {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        #[command(flatten)]
        shared: Shared,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(level)))
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .without_time()
        .init();

    let result = match cli.command {
        Command::Compile { formula, shared } => cmd::compile(&formula, &shared),
        Command::Check {
            formula,
            shared,
            random,
            oracle_cap,
            swap_verdicts,
        } => cmd::check(&formula, &shared, random, oracle_cap, swap_verdicts),
        Command::Run {
            formula,
            shared,
            atomic,
            tree,
            embed,
        } => cmd::run(&formula, &shared, atomic.as_deref(), &tree, embed),
        Command::Fuzz { shared, cases, property } => cmd::fuzz(&shared, cases, property),
        Command::Gmsc {
            program,
            tree,
            random,
            shared,
            swap_verdicts,
        } => cmd::gmsc(&program, tree.as_deref(), random, &shared, swap_verdicts),
        Command::Gnn { config, tree, shared } => cmd::gnn(&config, &tree, &shared),
    };
    match result {
        Ok(cmd::Outcome::Pass) => ExitCode::SUCCESS,
        Ok(cmd::Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.code)
        }
    }
}
