//! `fbmbt`: simulate power variations of fBm in Brownian time and check
//! them against their limits.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit status for a completed run with at least one failed comparison.
const EXIT_COMPARISON_FAILED: u8 = 2;
/// Exit status for bad flags or a configuration the model does not cover.
const EXIT_CONFIG: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "fbmbt",
    version,
    about = "Power variations of fractional Brownian motion in Brownian time"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write raw simulated quantities.
    #[command(subcommand)]
    Simulate(Simulate),
    /// Print deterministic constants as JSON.
    #[command(subcommand)]
    Constants(Constants),
    /// Run a Monte Carlo check against the limit law.
    #[command(subcommand)]
    Verify(Verify),
    /// Check the scenery integral against its own limit moments.
    Bmrs(BmrsArgs),
}

#[derive(Debug, Subcommand)]
enum Simulate {
    /// Hermite variations in direct and separated form, one row per
    /// replicate, order and time.
    Variation(VariationArgs),
    /// A stretch of fractional Gaussian noise.
    Fgn(FgnArgs),
    /// Crossing counts of one dyadic skeleton walk.
    Walk(WalkArgs),
    /// Scenery integrals, one row per replicate and time.
    Bmrs(SimulateBmrsArgs),
}

#[derive(Debug, Subcommand)]
enum Constants {
    /// Coefficients of `x^p` in the Hermite basis.
    Hermite {
        #[arg(long)]
        p: u32,
    },
    /// `σ_r² = r! Σ ρ(a)^r` with a certified truncation.
    Sigma {
        #[arg(long = "H")]
        hurst: f64,
        #[arg(long)]
        r: u32,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

#[derive(Debug, Subcommand)]
enum Verify {
    /// Hermite variations of order `2r-1` or `2r`.
    Theorem(VerifyArgs),
    /// Power variations of order `2r-1` or `2r`.
    Corollary(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Parity {
    Odd,
    Even,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FgnFormat {
    Csv,
    Binary,
}

/// Flags shared by every Monte Carlo run.
#[derive(Debug, Args)]
struct RunArgs {
    /// Replicates per statistic.
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; never changes the output.
    #[arg(long, env = "FBMBT_WORKERS")]
    workers: Option<usize>,
    /// Report file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Replicates of the `E ∫ L²` oracle.
    #[arg(long, default_value_t = 4000)]
    oracle_reps: usize,
    /// Walk level of the oracle; two above the finest `--n` by default.
    #[arg(long)]
    oracle_level: Option<u32>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    mode: Parity,
    #[arg(long = "H", default_value_t = 0.5)]
    hurst: f64,
    /// Walk levels (repeatable).
    #[arg(long, default_values_t = [12])]
    n: Vec<u32>,
    /// Orders `r` (repeatable).
    #[arg(long, default_values_t = [1])]
    r: Vec<u32>,
    /// Times (repeatable).
    #[arg(long, default_values_t = [1.0])]
    t: Vec<f64>,
    /// Run even when `H` is outside the range the limit theorem covers.
    #[arg(long)]
    override_hypotheses: bool,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct BmrsArgs {
    /// Times (repeatable).
    #[arg(long, default_values_t = [1.0])]
    t: Vec<f64>,
    /// Spatial cutoff: the scenery lives on `|x| <= p`.
    #[arg(long, default_value_t = 8.0)]
    p: f64,
    /// Refinement: scenery spacing `2^{-m/2}`.
    #[arg(long, default_value_t = 10)]
    m: u32,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct VariationArgs {
    #[arg(long = "H", default_value_t = 0.5)]
    hurst: f64,
    #[arg(long, default_value_t = 12)]
    n: u32,
    /// Hermite orders (repeatable).
    #[arg(long, default_values_t = [1])]
    r: Vec<u32>,
    /// Times (repeatable).
    #[arg(long, default_values_t = [1.0])]
    t: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FgnArgs {
    #[arg(long = "H", default_value_t = 0.5)]
    hurst: f64,
    /// Number of increments.
    #[arg(long, default_value_t = 1024)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = FgnFormat::Csv)]
    format: FgnFormat,
}

#[derive(Debug, Args)]
struct WalkArgs {
    #[arg(long, default_value_t = 12)]
    n: u32,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateBmrsArgs {
    #[arg(long, default_values_t = [1.0])]
    t: Vec<f64>,
    #[arg(long, default_value_t = 8.0)]
    p: f64,
    #[arg(long, default_value_t = 10)]
    m: u32,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code_for(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn repeatable_flags_collect() {
        let cli = Cli::try_parse_from([
            "fbmbt", "verify", "theorem", "--mode", "even", "--t", "1", "--t", "2", "--n", "9",
        ])
        .unwrap();
        let Command::Verify(Verify::Theorem(a)) = cli.command else {
            panic!("wrong subcommand");
        };
        assert_eq!(a.t, vec![1.0, 2.0]);
        assert_eq!(a.n, vec![9]);
        assert_eq!(a.r, vec![1]);
        assert_eq!(a.mode, Parity::Even);
    }
}
