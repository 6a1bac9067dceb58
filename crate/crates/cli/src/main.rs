use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use solenoid_cli::report::{CmdResult, DEFAULT_REP_BUDGET, EXIT_ERROR};
use solenoid_cli::{cmd_action, cmd_compare, cmd_invariants, ChainSpecFile, CompareOptions, Failure, Relation, Start};
use solenoid_core::ReturnMode;

/// Finite-level invariants and comparisons of group chains.
#[derive(Parser)]
#[command(name = "solenoid", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum RelationArg {
    Equiv,
    Conj,
    Return,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Plain,
    Conjugate,
}

#[derive(Subcommand)]
enum Command {
    /// Indices, cores, kernel candidates, Steinitz number and normality.
    Invariants {
        spec: PathBuf,
        #[arg(long)]
        depth: Option<usize>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Decide a relation between two chains up to a depth.
    Compare {
        spec_a: PathBuf,
        spec_b: PathBuf,
        #[arg(long, value_enum)]
        relation: RelationArg,
        #[arg(long)]
        depth: Option<usize>,
        /// Interleaving used after truncation for `--relation return`.
        #[arg(long, value_enum, default_value = "plain")]
        mode: ModeArg,
        /// Node limit for the conjugator search.
        #[arg(long, default_value_t = DEFAULT_REP_BUDGET)]
        rep_budget: usize,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Act by a word on a point of the truncated fiber.
    Action {
        spec: PathBuf,
        #[arg(long)]
        depth: Option<usize>,
        /// Comma-separated letters such as `a^3,b^-1`; the rightmost acts first.
        #[arg(long, allow_hyphen_values = true)]
        word: String,
        /// `basepoint` or comma-separated coset indices, one per level.
        #[arg(long, default_value = "basepoint")]
        start: Start,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<ChainSpecFile, Failure> {
    ChainSpecFile::load(path).map_err(Failure::from)
}

fn run(cli: Cli) -> (CmdResult, Option<PathBuf>) {
    match cli.command {
        Command::Invariants { spec, depth, json } => (load(&spec).and_then(|s| cmd_invariants(&s, depth)), json),
        Command::Compare { spec_a, spec_b, relation, depth, mode, rep_budget, json } => {
            let opts = CompareOptions {
                relation: match relation {
                    RelationArg::Equiv => Relation::Equiv,
                    RelationArg::Conj => Relation::Conj,
                    RelationArg::Return => Relation::Return,
                },
                depth,
                mode: match mode {
                    ModeArg::Plain => ReturnMode::Plain,
                    ModeArg::Conjugate => ReturnMode::Conjugate,
                },
                rep_budget,
            };
            let result = load(&spec_a).and_then(|a| load(&spec_b).and_then(|b| cmd_compare(&a, &b, &opts)));
            (result, json)
        }
        Command::Action { spec, depth, word, start, json } => {
            (load(&spec).and_then(|s| cmd_action(&s, depth, &word, &start)), json)
        }
    }
}

fn main() -> ExitCode {
    let (result, out) = run(Cli::parse());
    match result {
        Ok(outcome) => {
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, &outcome.json) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::from(EXIT_ERROR as u8);
                    }
                }
                None => print!("{}", outcome.json),
            }
            ExitCode::from(outcome.code as u8)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
