use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use opcumulant::expr::Coeff;
use opcumulant::numeric::{DEFAULT_DIM, DEFAULT_SAMPLES, DEFAULT_TOLERANCE};
use opcumulant::transforms::InversionFormula;
use opcumulant::OrderingMapKind;

mod commands;

/// Operator-valued moments and cumulants under ordering maps.
#[derive(Debug, Parser)]
#[command(name = "opcumulant", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print a moment or cumulant expansion.
    Expand(ExpandArgs),
    /// Check an identity numerically on random operator models.
    Verify(VerifyArgs),
    /// Worked examples.
    Demo {
        #[command(subcommand)]
        demo: Demo,
    },
    /// Reduced density matrices of fermionic states.
    Rdm(RdmArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Direction {
    Moments,
    Cumulants,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
struct ExpandArgs {
    #[arg(long, value_enum)]
    direction: Direction,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "pto")]
    map: OrderingMapKind,
    #[arg(long, value_enum, default_value = "text")]
    format: OutputFormat,
    /// Inversion formula for `--direction cumulants`.
    #[arg(long, default_value = "recursive")]
    formula: InversionFormula,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VerifyKind {
    Identity,
    Cluster,
    Factorization,
    RoerdnikEquivalence,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(value_enum)]
    kind: VerifyKind,
    /// Order of the identity; for factorization, the largest k + m.
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value = "pto")]
    map: OrderingMapKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_DIM)]
    dim: usize,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tol: f64,
    #[arg(long, default_value = "recursive")]
    formula: InversionFormula,
    /// Group A is atoms 1..=split.
    #[arg(long, conflicts_with = "group_a")]
    split: Option<usize>,
    /// Group A as an explicit comma-separated atom list.
    #[arg(long, value_delimiter = ',')]
    group_a: Option<Vec<usize>>,
    /// Atom count of the split model used by `factorization`.
    #[arg(long, default_value_t = 4)]
    atoms: usize,
    /// Pair the samples of the two groups (the check should then fail).
    #[arg(long)]
    correlated: bool,
    /// Operator model JSON file instead of a random model.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Identity sides as expressions, overriding the generated pair.
    #[arg(long, requires = "rhs")]
    lhs: Option<String>,
    #[arg(long, requires = "lhs")]
    rhs: Option<String>,
    /// Print every diagnostic line.
    #[arg(long)]
    verbose: bool,
}

#[derive(Debug, Subcommand)]
enum Demo {
    /// Summing operators before time ordering versus after.
    AppendixA(AppendixAArgs),
}

#[derive(Debug, Args)]
struct AppendixAArgs {
    #[arg(long, default_value_t = 6)]
    degree: usize,
    #[arg(long, default_value = "1")]
    t1: Coeff,
    #[arg(long, default_value = "0")]
    t2: Coeff,
    /// Replace C and D by the identity.
    #[arg(long)]
    commuting: bool,
    /// Also evaluate the continuous case on [0, t].
    #[arg(long)]
    continuous: bool,
    #[arg(long, default_value = "1")]
    t: Coeff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RdmAction {
    Compute,
    Cumulants,
    Check,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RdmCase {
    Determinant,
    Additivity,
    Reconstruction,
    Trace,
}

#[derive(Debug, Args)]
struct RdmArgs {
    #[arg(value_enum)]
    action: RdmAction,
    #[arg(long, value_enum, required_if_eq("action", "check"))]
    case: Option<RdmCase>,
    /// State file with `bitstring re im` lines.
    #[arg(long, conflicts_with = "occupied")]
    state: Option<PathBuf>,
    /// Occupied orbitals of a single determinant, comma separated.
    #[arg(long, value_delimiter = ',')]
    occupied: Option<Vec<usize>>,
    #[arg(long, default_value_t = 6)]
    orbitals: usize,
    #[arg(long)]
    electrons: Option<usize>,
    #[arg(long)]
    split: Option<usize>,
    /// Rank for compute/cumulants, highest rank for checks.
    #[arg(long, default_value_t = 2)]
    p: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Entries at or below this magnitude are not printed.
    #[arg(long, default_value_t = 1e-12)]
    threshold: f64,
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("OPCUMULANT_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("OPCUMULANT_THREADS must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Expand(a) => commands::expand(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Demo {
            demo: Demo::AppendixA(a),
        } => commands::appendix_a(&a),
        Command::Rdm(a) => commands::rdm(&a),
    };
    match result {
        Ok(out) => {
            print!("{}", out.text);
            if out.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
