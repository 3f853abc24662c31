use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use fbmbt_core::experiment::{
    render_report, run_corollary_check, run_experiment, run_theorem_check, variation_pair, Comparison,
    ExperimentConfig, ExperimentReport, Mode, ReportFormat, ToleranceKind,
};
use fbmbt_core::gaussian::{sample_fgn, write_fgn_binary, write_fgn_csv};
use fbmbt_core::hermite::power_to_hermite;
use fbmbt_core::limits::{sigma, simulate_scenery_integral};
use fbmbt_core::rng::derive_seed;
use fbmbt_core::walk::{count_crossings, simulate_walk, write_counts_csv, DyadicLevel};
use fbmbt_core::{Error, HurstParameter};
use serde_json::json;

use crate::{
    BmrsArgs, Command, Constants, FgnArgs, FgnFormat, Format, Parity, RunArgs, Simulate, SimulateBmrsArgs,
    VariationArgs, Verify, VerifyArgs, WalkArgs, EXIT_COMPARISON_FAILED, EXIT_CONFIG,
};

pub fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Simulate(Simulate::Variation(a)) => simulate_variation(a),
        Command::Simulate(Simulate::Fgn(a)) => simulate_fgn(a),
        Command::Simulate(Simulate::Walk(a)) => simulate_walk_counts(a),
        Command::Simulate(Simulate::Bmrs(a)) => simulate_bmrs(a),
        Command::Constants(Constants::Hermite { p }) => {
            let e = power_to_hermite(p)?;
            println!("{}", json!({ "p": e.p, "coeffs": e.coeffs }));
            Ok(ExitCode::SUCCESS)
        }
        Command::Constants(Constants::Sigma { hurst, r, tol }) => {
            let s = sigma(r, HurstParameter::new(hurst)?, tol)?;
            println!(
                "{}",
                json!({ "r": s.order, "H": hurst, "sigma2": s.sigma2, "K": s.truncation, "tail_bound": s.tail_bound })
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(Verify::Theorem(a)) => verify(a, false),
        Command::Verify(Verify::Corollary(a)) => verify(a, true),
        Command::Bmrs(a) => bmrs(a),
    }
}

/// Bad requests exit with the configuration status; everything else that
/// stops a run early (I/O, numerical breakdown) with 1.
pub fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(
            Error::InvalidHurst(_)
            | Error::InvalidArgument { .. }
            | Error::EmptyGrid
            | Error::TooManyPoints { .. }
            | Error::UnsortedPoints { .. }
            | Error::Divergent { .. }
            | Error::ToleranceUnreachable { .. }
            | Error::DegreeTooLarge { .. }
            | Error::IndexOutOfRange { .. }
            | Error::HorizonTooLong { .. }
            | Error::TooFewSamples { .. }
            | Error::Config(_),
        ) => EXIT_CONFIG,
        _ => 1,
    }
}

fn write_text(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn sorted(mut xs: Vec<u32>) -> Vec<u32> {
    xs.sort_unstable();
    xs.dedup();
    xs
}

fn sorted_times(mut ts: Vec<f64>) -> Vec<f64> {
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

fn apply_run_args(cfg: &mut ExperimentConfig, run: &RunArgs) {
    cfg.replicates = run.reps;
    cfg.master_seed = run.seed;
    cfg.workers = run
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from));
    cfg.oracle.replicates = run.oracle_reps;
    cfg.oracle.level = run.oracle_level;
    cfg.output = run.out.clone();
}

/// Write the report and summarise the comparisons on stderr.
fn finish(report: &ExperimentReport, run: &RunArgs) -> Result<ExitCode> {
    let format = match run.format {
        Format::Csv => ReportFormat::Csv,
        Format::Json => ReportFormat::Json,
    };
    write_text(run.out.as_deref(), &render_report(report, format)?)?;
    let failed: Vec<_> = report.failures().collect();
    for c in &failed {
        eprintln!(
            "FAIL {} {} n={} r={} t={}: observed {:.6} vs target {:.6} (allowed {})",
            c.check.as_str(),
            c.key.statistic.as_str(),
            c.key.n,
            c.key.r,
            c.key.t,
            c.observed,
            c.target,
            allowance(c)
        );
    }
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    eprintln!(
        "{} of {} comparisons passed in {:.1}s",
        report.comparisons.len() - failed.len(),
        report.comparisons.len(),
        report.wall_time_seconds
    );
    Ok(if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_COMPARISON_FAILED)
    })
}

fn allowance(c: &Comparison) -> String {
    match c.tolerance_kind {
        ToleranceKind::Relative => format!("{}%", 100.0 * c.tolerance),
        ToleranceKind::Absolute => format!("±{}", c.tolerance),
        ToleranceKind::StandardErrors => format!("{} SE", c.tolerance),
    }
}

fn verify(a: VerifyArgs, corollary: bool) -> Result<ExitCode> {
    let mode = match (corollary, a.mode) {
        (false, Parity::Odd) => Mode::TheoremOdd,
        (false, Parity::Even) => Mode::TheoremEven,
        (true, Parity::Odd) => Mode::CorollaryOdd,
        (true, Parity::Even) => Mode::CorollaryEven,
    };
    let mut cfg = ExperimentConfig::new(mode, HurstParameter::new(a.hurst)?);
    cfg.levels = sorted(a.n);
    cfg.orders = sorted(a.r);
    cfg.times = sorted_times(a.t);
    cfg.override_hypotheses = a.override_hypotheses;
    apply_run_args(&mut cfg, &a.run);
    let report = if corollary {
        run_corollary_check(&cfg)?
    } else {
        run_theorem_check(&cfg)?
    };
    finish(&report, &a.run)
}

fn bmrs(a: BmrsArgs) -> Result<ExitCode> {
    let mut cfg = ExperimentConfig::new(Mode::BmrsReference, HurstParameter::new(0.5)?);
    cfg.times = sorted_times(a.t);
    cfg.scenery.cutoff = a.p;
    cfg.scenery.refinement = a.m;
    apply_run_args(&mut cfg, &a.run);
    let report = run_experiment(&cfg)?;
    finish(&report, &a.run)
}

fn simulate_variation(a: VariationArgs) -> Result<ExitCode> {
    let h = HurstParameter::new(a.hurst)?;
    let mut csv = String::from("replicate,r,t,n,value_direct,value_separated\n");
    for rep in 0..a.reps {
        let seed = derive_seed(a.seed, &[rep as u64]);
        for &t in &a.t {
            for &r in &a.r {
                let (direct, separated) = variation_pair(h, a.n, r, t, seed)?;
                writeln!(csv, "{rep},{r},{t:?},{},{direct:?},{separated:?}", a.n)?;
            }
        }
    }
    write_text(a.out.as_deref(), &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn simulate_fgn(a: FgnArgs) -> Result<ExitCode> {
    let fgn = sample_fgn(HurstParameter::new(a.hurst)?, a.m, a.seed)?;
    match a.format {
        FgnFormat::Csv => write_fgn_csv(&fgn, &a.out)?,
        FgnFormat::Binary => write_fgn_binary(&fgn, &a.out)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn simulate_walk_counts(a: WalkArgs) -> Result<ExitCode> {
    let level = DyadicLevel::new(a.n);
    let k = level.steps_for(a.t)?;
    let walk = simulate_walk(level, k, a.seed)?;
    write_counts_csv(&count_crossings(&walk, k)?, &a.out)?;
    Ok(ExitCode::SUCCESS)
}

fn simulate_bmrs(a: SimulateBmrsArgs) -> Result<ExitCode> {
    let mut csv = String::from("replicate,t,value,conditional_variance\n");
    for rep in 0..a.reps {
        let seed = derive_seed(a.seed, &[rep as u64]);
        for &t in &a.t {
            let s = simulate_scenery_integral(t, a.p, a.m, seed)?;
            writeln!(csv, "{rep},{t:?},{:?},{:?}", s.value, s.conditional_variance)?;
        }
    }
    write_text(a.out.as_deref(), &csv)?;
    Ok(ExitCode::SUCCESS)
}
