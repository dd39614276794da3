//! `graphstein`: generate and count graphs, run the homogeneity test, compute
//! permutation statistics, verify couplings and run experiments.
//!
//! Exit codes: 0 success, 1 when `test` rejects or `verify-coupling` finds a
//! failing residual, 2 for usage, parse, I/O and parameter errors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "graphstein",
    version,
    about = "Dense-graph homogeneity test, permutation statistics and Stein couplings"
)]
pub struct Cli {
    /// Leave the timestamp out of JSON reports (byte-identical reruns).
    #[arg(long, global = true)]
    pub no_timestamp: bool,

    /// Log progress lines to stderr.
    #[arg(long, short, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// RNG seed; required by every stochastic command.
    #[arg(long, env = "GRAPHSTEIN_SEED")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct DomainArgs {
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    pub p_lo: f64,
    #[arg(long, default_value_t = 0.99)]
    pub p_hi: f64,
    /// Grid step of the p scan.
    #[arg(long, default_value_t = 1e-3)]
    pub grid: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Pattern {
    K2,
    K3,
    C4,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Builtin {
    /// Local-dependence coupling of (W₁, W₂) on G(n, p).
    Graph,
    /// Sum of n independent centred Bernoulli(p) coins, local dependence.
    Coins,
    /// Exchangeable pair: flip one of n random signs.
    SignFlip,
    /// W uniform on ±1, W′ = −W, Λ = 2.
    Reflection,
    /// Size bias of Binomial(n, p).
    SizeBias,
    /// Fulman's descent/inversion pair on n letters (linear maps only).
    Fulman,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    Exact,
    Mc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Kind {
    Coverage,
    Power,
    Distance,
    Rate,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample G(n, p) or G(n, κ) and write it as an edge list.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, conflicts_with = "kernel", required_unless_present = "kernel")]
        p: Option<f64>,
        /// const:P or block:FILE (JSON with "breaks" and "values")
        #[arg(long)]
        kernel: Option<String>,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count edges, triangles or 4-cycles of an edge-list graph.
    Count {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "c4")]
        pattern: Pattern,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Homogeneity test: reject (exit 1) iff the confidence set is empty.
    Test {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Confidence set for p.
    Confset {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Descents, inversions and their standardised values.
    Permstat {
        /// One-line notation, 1-based, whitespace separated.
        #[arg(long, conflicts_with_all = ["input", "n"])]
        perm: Option<String>,
        /// File holding one permutation in one-line notation.
        #[arg(long = "in", conflicts_with = "n")]
        input: Option<PathBuf>,
        /// Size of a uniformly random permutation.
        #[arg(long)]
        n: Option<usize>,
        /// With --n: number of random draws to summarise.
        #[arg(long, requires = "n")]
        reps: Option<usize>,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        jobs: Option<usize>,
        /// With --reps: dump draws as CSV (rep,w1,w2).
        #[arg(long, requires = "reps")]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the Stein identity of a built-in coupling.
    VerifyCoupling {
        #[arg(long, value_enum)]
        builtin: Builtin,
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
        #[arg(long, default_value_t = 100_000)]
        reps: usize,
        #[command(flatten)]
        seed: SeedArg,
        /// Also report the error-bound ingredients.
        #[arg(long)]
        bounds: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Coverage, power, distance-to-normal and rate experiments.
    Experiment {
        #[arg(long, value_enum)]
        kind: Kind,
        /// Sample sizes, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, conflicts_with_all = ["kernel", "permutations"])]
        p: Option<f64>,
        #[arg(long, conflicts_with = "permutations")]
        kernel: Option<String>,
        /// Use uniform permutations (descents, inversions) instead of graphs.
        #[arg(long)]
        permutations: bool,
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long)]
        reps: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        jobs: Option<usize>,
        /// Dump the per-replication matrix as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
