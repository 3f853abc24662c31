//! Monte-Carlo harness: replicated simulation of the variation statistics,
//! comparison with the limit laws, and report emission.
//!
//! Replicate `i` draws all its randomness from substreams of
//! `(master_seed, i, ...)`, so its values do not depend on which worker
//! runs it. Results are collected in replicate order and reduced
//! sequentially, which makes reports independent of the worker count.

mod config;
mod report;
mod stats;

pub use config::{ExperimentConfig, Mode, OracleConfig, SceneryConfig, MAX_LEVEL, MAX_ORDER};
pub use report::{
    emit_report, parse_json_report, render_csv, render_json, render_report, Check, Comparison, CrossMoment,
    ExperimentReport, Label, Outcome, ReplicateRow, ReportFormat, StatKey, StatKind, Summary, TargetSource,
    ToleranceKind, CSV_HEADER, SCHEMA_VERSION,
};
pub use stats::{correlation, covariance, ks_distance, SampleMoments, MIN_KS_SAMPLES};

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::{sample_fgn_window, HurstParameter};
use crate::hermite::{corollary_coeff_even, corollary_coeff_odd};
use crate::limits::{
    local_time_square_oracle, mean_abs_brownian, mixture_cdf_odd, sigma, simulate_scenery_integral, OracleEstimate,
};
use crate::rng::{derive_seed, stream};
use crate::variation::{
    corollary_power_variation_even, corollary_power_variation_odd, even_decomposition, hermite_variation_direct,
    hermite_variation_separated, hermite_variations_separated, odd_decomposition, window_half_width,
};
use crate::walk::{count_crossings, simulate_walk, DyadicLevel};

/// Fraction of quarantined replicates above which a run fails.
pub const QUARANTINE_LIMIT: f64 = 1e-3;

/// Aggregate comparisons need at least this many accepted replicates.
pub const MIN_AGGREGATE_REPLICATES: usize = MIN_KS_SAMPLES;

pub const THEOREM_ODD_VARIANCE_TOLERANCE: f64 = 0.05;
pub const THEOREM_EVEN_VARIANCE_TOLERANCE: f64 = 0.10;
pub const COROLLARY_VARIANCE_TOLERANCE: f64 = 0.10;
pub const SCENERY_VARIANCE_TOLERANCE: f64 = 0.10;
pub const SCALING_TOLERANCE: f64 = 0.10;
pub const KS_TOLERANCE: f64 = 0.02;
pub const CORRELATION_TOLERANCE: f64 = 0.05;
pub const MEAN_STANDARD_ERRORS: f64 = 3.0;
pub const IDENTITY_TOLERANCE: f64 = 1e-9;
/// Relative tolerance for all `smoke` runs (`H != 1/2`).
pub const SMOKE_TOLERANCE: f64 = 0.15;
pub const SMOKE_KS_TOLERANCE: f64 = 0.05;

/// Accuracy requested from [`sigma`] for targets.
const SIGMA_TOLERANCE: f64 = 1e-9;

/// One direct/separated pair for a fresh walk and fGn, as written by
/// `simulate variation`.
pub fn variation_pair(h: HurstParameter, n: u32, order: u32, t: f64, seed: u64) -> Result<(f64, f64)> {
    let level = DyadicLevel::new(n);
    let k = level.steps_for(t)?;
    let walk = simulate_walk(level, k.max(1), derive_seed(seed, &[stream::WALK]))?;
    let (lo, hi) = walk.range(k.max(1));
    let fgn = sample_fgn_window(h, window_half_width(lo, hi), derive_seed(seed, &[stream::FGN]))?;
    let direct = hermite_variation_direct(order, t, &fgn, &walk)?;
    let separated = hermite_variation_separated(order, t, &fgn, &count_crossings(&walk, k)?)?;
    Ok((direct.value, separated.value))
}

fn columns(cfg: &ExperimentConfig) -> Vec<StatKey> {
    let mut out = Vec::new();
    if cfg.mode == Mode::BmrsReference {
        for &t in &cfg.times {
            out.push(StatKey {
                statistic: StatKind::Scenery,
                n: cfg.scenery.refinement,
                r: 0,
                order: 0,
                t,
            });
        }
        return out;
    }
    for &n in &cfg.levels {
        for &t in &cfg.times {
            for &r in &cfg.orders {
                let order = cfg.mode.hermite_order(r);
                let key = |statistic| StatKey {
                    statistic,
                    n,
                    r,
                    order,
                    t,
                };
                match cfg.mode {
                    Mode::TheoremOdd | Mode::TheoremEven => out.push(key(StatKind::Hermite)),
                    Mode::CorollaryOdd => {
                        out.push(key(StatKind::PowerOdd));
                        out.push(key(StatKind::Decomposition));
                    }
                    Mode::CorollaryEven => {
                        out.push(key(StatKind::PowerEven));
                        out.push(key(StatKind::Decomposition));
                    }
                    Mode::BmrsReference => unreachable!(),
                }
            }
        }
    }
    out
}

/// All statistics of one replicate, in column order.
fn walk_replicate(cfg: &ExperimentConfig, rep: u64) -> Result<Vec<f64>> {
    let h = cfg.hurst;
    let t_max = *cfg.times.last().expect("validated");
    let max_r = *cfg.orders.last().expect("validated");
    let hermite_orders: Vec<u32> = if cfg.mode.is_corollary() {
        (1..=2 * max_r).collect()
    } else {
        cfg.orders.iter().map(|&r| cfg.mode.hermite_order(r)).collect()
    };
    let mut out = Vec::new();
    for &n in &cfg.levels {
        let level = DyadicLevel::new(n);
        let k_max = level.steps_for(t_max)?.max(1);
        let walk = simulate_walk(
            level,
            k_max,
            derive_seed(cfg.master_seed, &[rep, n as u64, stream::WALK]),
        )?;
        let (lo, hi) = walk.range(k_max);
        let fgn = sample_fgn_window(
            h,
            window_half_width(lo, hi),
            derive_seed(cfg.master_seed, &[rep, n as u64, stream::FGN]),
        )?;
        for &t in &cfg.times {
            let counts = count_crossings(&walk, level.steps_for(t)?)?;
            let stats: Vec<f64> = hermite_variations_separated(&hermite_orders, t, &fgn, &counts)?
                .iter()
                .map(|s| s.value)
                .collect();
            for (i, &r) in cfg.orders.iter().enumerate() {
                match cfg.mode {
                    Mode::TheoremOdd | Mode::TheoremEven => out.push(stats[i]),
                    Mode::CorollaryOdd => {
                        out.push(corollary_power_variation_odd(r, t, &fgn, &walk)?.value);
                        out.push(odd_decomposition(r, &stats)?);
                    }
                    Mode::CorollaryEven => {
                        out.push(corollary_power_variation_even(r, t, &fgn, &walk)?.value);
                        out.push(even_decomposition(r, &stats)?);
                    }
                    Mode::BmrsReference => unreachable!(),
                }
            }
        }
    }
    Ok(out)
}

fn scenery_replicate(cfg: &ExperimentConfig, rep: u64) -> Result<Vec<f64>> {
    cfg.times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let seed = derive_seed(cfg.master_seed, &[rep, i as u64, stream::SCENERY]);
            Ok(simulate_scenery_integral(t, cfg.scenery.cutoff, cfg.scenery.refinement, seed)?.value)
        })
        .collect()
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

fn quarantine_exceeded(quarantined: usize, total: usize) -> bool {
    quarantined as f64 > QUARANTINE_LIMIT * total as f64
}

/// Run all replicates, quarantine non-finite ones and summarise.
fn simulate(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let keys = columns(cfg);
    let rows: Vec<Result<Vec<f64>>> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|rep| match cfg.mode {
            Mode::BmrsReference => scenery_replicate(cfg, rep),
            _ => walk_replicate(cfg, rep),
        })
        .collect();
    for (rep, row) in rows.into_iter().enumerate() {
        let values = row?;
        if values.iter().all(|v| v.is_finite()) {
            report.replicates.push(ReplicateRow {
                replicate: rep as u64,
                values,
            });
        } else {
            log::warn!("replicate {rep} produced a non-finite statistic; quarantined");
            report.quarantined.push(rep as u64);
        }
    }
    if quarantine_exceeded(report.quarantined.len(), cfg.replicates) {
        return Err(Error::Quarantine {
            quarantined: report.quarantined.len(),
            total: cfg.replicates,
        });
    }
    report.columns = keys;
    report.summaries = (0..report.columns.len())
        .map(|i| Summary {
            key: report.columns[i],
            moments: SampleMoments::from_slice(&report.column(i)),
        })
        .collect();
    report.cross_moments = cross_moments(report);
    Ok(())
}

/// Covariances between columns of the same statistic and level that
/// differ in exactly one of `r` and `t`.
fn cross_moments(report: &ExperimentReport) -> Vec<CrossMoment> {
    let cols: Vec<Vec<f64>> = (0..report.columns.len()).map(|i| report.column(i)).collect();
    let mut out = Vec::new();
    for i in 0..report.columns.len() {
        for j in i + 1..report.columns.len() {
            let (a, b) = (report.columns[i], report.columns[j]);
            let same_r = a.r == b.r;
            let same_t = a.t == b.t;
            if a.statistic == b.statistic && a.n == b.n && same_r != same_t {
                out.push(CrossMoment {
                    first: a,
                    second: b,
                    covariance: covariance(&cols[i], &cols[j]),
                    correlation: correlation(&cols[i], &cols[j]),
                });
            }
        }
    }
    out
}

struct Targets {
    label: Label,
    sigma2: BTreeMap<u32, Option<(f64, f64)>>,
    oracle: BTreeMap<u64, OracleEstimate>,
}

impl Targets {
    fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            label: if cfg.hurst.is_brownian() {
                Label::Acceptance
            } else {
                Label::Smoke
            },
            sigma2: BTreeMap::new(),
            oracle: BTreeMap::new(),
        }
    }

    fn relative(&self, acceptance: f64) -> f64 {
        match self.label {
            Label::Acceptance => acceptance,
            Label::Smoke => SMOKE_TOLERANCE,
        }
    }

    fn ks(&self) -> f64 {
        match self.label {
            Label::Acceptance => KS_TOLERANCE,
            Label::Smoke => SMOKE_KS_TOLERANCE,
        }
    }

    /// `(σ_q², tail_bound)`, or `None` if the series diverges.
    fn sigma2(&mut self, q: u32, h: HurstParameter, notes: &mut Vec<String>) -> Option<(f64, f64)> {
        *self
            .sigma2
            .entry(q)
            .or_insert_with(|| match sigma(q, h, SIGMA_TOLERANCE) {
                Ok(s) => Some((s.sigma2, s.tail_bound)),
                Err(e) => {
                    notes.push(format!(
                        "sigma_{q} unavailable at H = {h}: {e}; variance targets skipped"
                    ));
                    None
                }
            })
    }

    fn sigma_source(h: HurstParameter) -> TargetSource {
        if h.is_brownian() {
            TargetSource::ClosedForm
        } else {
            TargetSource::Quadrature
        }
    }

    fn oracle(&mut self, cfg: &ExperimentConfig, t: f64) -> Result<OracleEstimate> {
        if let Some(o) = self.oracle.get(&t.to_bits()) {
            return Ok(*o);
        }
        let est = local_time_square_oracle(
            t,
            cfg.oracle_level(),
            cfg.oracle.replicates,
            derive_seed(cfg.master_seed, &[stream::ORACLE, t.to_bits()]),
        )?;
        self.oracle.insert(t.to_bits(), est);
        Ok(est)
    }
}

struct ComparisonBuilder {
    label: Label,
}

impl ComparisonBuilder {
    #[allow(clippy::too_many_arguments)]
    fn make(
        &self,
        check: Check,
        key: StatKey,
        other: Option<StatKey>,
        observed: (f64, f64),
        target: (f64, f64),
        target_source: TargetSource,
        tolerance: (f64, ToleranceKind),
    ) -> Comparison {
        Comparison {
            check,
            key,
            other,
            observed: observed.0,
            standard_error: observed.1,
            target: target.0,
            target_standard_error: target.1,
            target_source,
            tolerance: tolerance.0,
            tolerance_kind: tolerance.1,
            outcome: Outcome::Pass,
            label: self.label,
        }
        .judge()
    }
}

fn degenerate(mut c: Comparison) -> Comparison {
    c.outcome = Outcome::Degenerate;
    c
}

/// Variance of the limit at `t` for one column, with its target standard
/// error and provenance; `None` if a constant is unavailable.
fn limit_variance(
    cfg: &ExperimentConfig,
    targets: &mut Targets,
    key: &StatKey,
    notes: &mut Vec<String>,
) -> Result<Option<(f64, f64, TargetSource, f64)>> {
    let h = cfg.hurst;
    // Σ w_k² σ_{q_k}² over the Hermite components of the statistic
    let components: Vec<(f64, u32)> = match key.statistic {
        StatKind::Hermite => vec![(1.0, key.order)],
        StatKind::PowerOdd => (1..=key.r)
            .map(|k| Ok((corollary_coeff_odd(key.r, k)?, 2 * k - 1)))
            .collect::<Result<_>>()?,
        StatKind::PowerEven => (1..=key.r)
            .map(|k| Ok((corollary_coeff_even(key.r, k)?, 2 * k)))
            .collect::<Result<_>>()?,
        _ => return Ok(None),
    };
    let mut weight = 0.0;
    let mut bound = 0.0;
    for (w, q) in components {
        let Some((s2, tb)) = targets.sigma2(q, h, notes) else {
            return Ok(None);
        };
        weight += w * w * s2;
        bound += w * w * tb;
    }
    if key.order % 2 == 1 {
        Ok(Some((
            weight * mean_abs_brownian(key.t),
            0.0,
            Targets::sigma_source(h),
            bound * mean_abs_brownian(key.t),
        )))
    } else {
        let o = targets.oracle(cfg, key.t)?;
        Ok(Some((
            weight * o.mean,
            weight * o.standard_error,
            TargetSource::OracleMc,
            bound * o.mean,
        )))
    }
}

fn compare(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    if report.replicates.len() < MIN_AGGREGATE_REPLICATES {
        report.notes.push(format!(
            "{} accepted replicates; aggregate comparisons need at least {MIN_AGGREGATE_REPLICATES}",
            report.replicates.len()
        ));
        return Ok(());
    }
    let mut targets = Targets::new(cfg);
    let b = ComparisonBuilder { label: targets.label };
    let mut notes = Vec::new();
    let mut out = Vec::new();
    let cols: Vec<Vec<f64>> = (0..report.columns.len()).map(|i| report.column(i)).collect();

    for (i, s) in report.summaries.iter().enumerate() {
        let key = s.key;
        let m = s.moments;
        if key.t == 0.0 {
            continue;
        }
        if key.statistic == StatKind::Decomposition {
            let power = &cols[i - 1];
            let dev = power
                .iter()
                .zip(&cols[i])
                .map(|(p, d)| (p - d).abs() / p.abs().max(1.0))
                .fold(0.0, f64::max);
            out.push(b.make(
                Check::DecompositionIdentity,
                report.columns[i - 1],
                Some(key),
                (dev, 0.0),
                (0.0, 0.0),
                TargetSource::ClosedForm,
                (IDENTITY_TOLERANCE, ToleranceKind::Absolute),
            ));
            continue;
        }
        out.push(b.make(
            Check::MeanZero,
            key,
            None,
            (m.mean, m.mean_se),
            (0.0, 0.0),
            TargetSource::ClosedForm,
            (MEAN_STANDARD_ERRORS, ToleranceKind::StandardErrors),
        ));

        let variance = if key.statistic == StatKind::Scenery {
            let o = targets.oracle(cfg, key.t)?;
            Some((o.mean, o.standard_error, TargetSource::OracleMc, 0.0))
        } else {
            limit_variance(cfg, &mut targets, &key, &mut notes)?
        };
        let Some((target, target_se, source, bound)) = variance else {
            continue;
        };
        let tol = match key.statistic {
            StatKind::Hermite if key.order % 2 == 1 => THEOREM_ODD_VARIANCE_TOLERANCE,
            StatKind::Hermite => THEOREM_EVEN_VARIANCE_TOLERANCE,
            StatKind::Scenery => SCENERY_VARIANCE_TOLERANCE,
            _ => COROLLARY_VARIANCE_TOLERANCE,
        };
        let is_degenerate = target <= bound.max(1e-12);
        let c = b.make(
            Check::Variance,
            key,
            None,
            (m.variance, m.variance_se),
            (target, target_se),
            source,
            (targets.relative(tol), ToleranceKind::Relative),
        );
        out.push(if is_degenerate { degenerate(c) } else { c });

        if key.order % 2 == 1 && key.statistic != StatKind::Scenery {
            let scale = (target / mean_abs_brownian(key.t)).sqrt();
            let c = if is_degenerate {
                degenerate(b.make(
                    Check::Ks,
                    key,
                    None,
                    (0.0, 0.0),
                    (0.0, 0.0),
                    TargetSource::Quadrature,
                    (targets.ks(), ToleranceKind::Absolute),
                ))
            } else {
                // validates (t, scale) so the closure below cannot fail
                mixture_cdf_odd(0.0, key.t, scale)?;
                let d = ks_distance(&cols[i], |z| mixture_cdf_odd(z, key.t, scale).unwrap_or(f64::NAN))?;
                b.make(
                    Check::Ks,
                    key,
                    None,
                    (d, 0.0),
                    (0.0, 0.0),
                    TargetSource::Quadrature,
                    (targets.ks(), ToleranceKind::Absolute),
                )
            };
            out.push(c);
        }
    }

    // t-scaling of the variance for even orders and the scenery: t^{3/2}
    for (i, si) in report.summaries.iter().enumerate() {
        let even = si.key.order % 2 == 0 && si.key.statistic != StatKind::Decomposition;
        if !even || si.key.t == 0.0 {
            continue;
        }
        let next = report.summaries.iter().skip(i + 1).find(|sj| {
            sj.key.statistic == si.key.statistic && sj.key.n == si.key.n && sj.key.r == si.key.r && sj.key.t > si.key.t
        });
        if let Some(sj) = next {
            let (v1, v2) = (si.moments.variance, sj.moments.variance);
            if v1 <= 0.0 {
                continue;
            }
            let ratio = v2 / v1;
            let se = ratio
                * ((si.moments.variance_se / v1).powi(2)
                    + (sj.moments.variance_se / v2.max(f64::MIN_POSITIVE)).powi(2))
                .sqrt();
            out.push(b.make(
                Check::TimeScaling,
                si.key,
                Some(sj.key),
                (ratio, se),
                ((sj.key.t / si.key.t).powf(1.5), 0.0),
                TargetSource::ClosedForm,
                (targets.relative(SCALING_TOLERANCE), ToleranceKind::Relative),
            ));
        }
    }

    // distinct Hermite orders are uncorrelated at every n
    if matches!(cfg.mode, Mode::TheoremOdd | Mode::TheoremEven) {
        for cm in &report.cross_moments {
            if cm.first.t == cm.second.t && cm.first.r != cm.second.r && cm.first.t > 0.0 {
                let m = report.replicates.len() as f64;
                let se = (1.0 - cm.correlation.powi(2)).max(0.0) / m.sqrt();
                out.push(b.make(
                    Check::CrossCorrelation,
                    cm.first,
                    Some(cm.second),
                    (cm.correlation, se),
                    (0.0, 0.0),
                    TargetSource::ClosedForm,
                    (CORRELATION_TOLERANCE, ToleranceKind::Absolute),
                ));
            }
        }
    }

    for (t, o) in &targets.oracle {
        notes.push(format!(
            "oracle E int L_t^2 dx at t = {}: {} +/- {} (level {}, {} walks)",
            f64::from_bits(*t),
            o.mean,
            o.standard_error,
            o.level,
            o.replicates
        ));
    }
    report.comparisons = out;
    report.notes.extend(notes);
    Ok(())
}

/// Run any mode.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = ExperimentReport::empty(cfg.clone());
    pool(cfg.workers)?.install(|| -> Result<()> {
        simulate(cfg, &mut report)?;
        compare(cfg, &mut report)
    })?;
    report.wall_time_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Check the Hermite-variation limits (`theorem_odd` / `theorem_even`).
pub fn run_theorem_check(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if !matches!(cfg.mode, Mode::TheoremOdd | Mode::TheoremEven) {
        return Err(Error::Config(format!("mode {} is not a theorem mode", cfg.mode)));
    }
    run_experiment(cfg)
}

/// Check the power-variation limits (`corollary_odd` / `corollary_even`).
pub fn run_corollary_check(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if !cfg.mode.is_corollary() {
        return Err(Error::Config(format!("mode {} is not a corollary mode", cfg.mode)));
    }
    run_experiment(cfg)
}
