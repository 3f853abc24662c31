use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::stats::SampleMoments;
use crate::error::{Error, Result};

/// Version of the report layout; bumped on any field change.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatKind {
    /// `V_n^{(q)}(t)`.
    Hermite,
    /// Normalised signed odd-power variation.
    PowerOdd,
    /// Normalised centred even-power variation.
    PowerEven,
    /// Hermite-basis reconstruction of the power variation.
    Decomposition,
    /// Riemann-Itô scenery sum.
    Scenery,
}

impl StatKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StatKind::Hermite => "hermite",
            StatKind::PowerOdd => "power_odd",
            StatKind::PowerEven => "power_even",
            StatKind::Decomposition => "decomposition",
            StatKind::Scenery => "scenery",
        }
    }
}

/// Identifies one column of per-replicate values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatKey {
    pub statistic: StatKind,
    pub n: u32,
    /// Index `r` as configured.
    pub r: u32,
    /// Hermite order or power.
    pub order: u32,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub replicate: u64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub key: StatKey,
    pub moments: SampleMoments,
}

/// Covariance between two columns sharing a level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossMoment {
    pub first: StatKey,
    pub second: StatKey,
    pub covariance: f64,
    pub correlation: f64,
}

/// How a target value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetSource {
    #[serde(rename = "closed-form")]
    ClosedForm,
    #[serde(rename = "quadrature")]
    Quadrature,
    #[serde(rename = "oracle-MC")]
    OracleMc,
}

impl TargetSource {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetSource::ClosedForm => "closed-form",
            TargetSource::Quadrature => "quadrature",
            TargetSource::OracleMc => "oracle-MC",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Variance,
    Ks,
    MeanZero,
    CrossCorrelation,
    TimeScaling,
    DecompositionIdentity,
}

impl Check {
    pub fn as_str(self) -> &'static str {
        match self {
            Check::Variance => "variance",
            Check::Ks => "ks",
            Check::MeanZero => "mean_zero",
            Check::CrossCorrelation => "cross_correlation",
            Check::TimeScaling => "time_scaling",
            Check::DecompositionIdentity => "decomposition_identity",
        }
    }
}

/// `Relative`: `|observed/target - 1| <= tol`. `Absolute`:
/// `|observed - target| <= tol`. `StandardErrors`:
/// `|observed - target| <= tol * standard_error`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceKind {
    Relative,
    Absolute,
    StandardErrors,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    /// The limit is degenerate (zero variance); nothing to compare.
    Degenerate,
}

/// `acceptance` at `H = 1/2`, `smoke` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Acceptance,
    Smoke,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub check: Check,
    pub key: StatKey,
    /// Second column for pairwise checks.
    pub other: Option<StatKey>,
    pub observed: f64,
    pub standard_error: f64,
    pub target: f64,
    pub target_standard_error: f64,
    pub target_source: TargetSource,
    pub tolerance: f64,
    pub tolerance_kind: ToleranceKind,
    pub outcome: Outcome,
    pub label: Label,
}

impl Comparison {
    /// Decide the outcome from the tolerance.
    pub(crate) fn judge(mut self) -> Self {
        if self.outcome == Outcome::Degenerate {
            return self;
        }
        let dev = (self.observed - self.target).abs();
        let ok = match self.tolerance_kind {
            ToleranceKind::Relative => self.target != 0.0 && dev <= self.tolerance * self.target.abs(),
            ToleranceKind::Absolute => dev <= self.tolerance,
            ToleranceKind::StandardErrors => dev <= self.tolerance * self.standard_error,
        };
        self.outcome = if ok { Outcome::Pass } else { Outcome::Fail };
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub columns: Vec<StatKey>,
    pub replicates: Vec<ReplicateRow>,
    pub quarantined: Vec<u64>,
    pub summaries: Vec<Summary>,
    pub cross_moments: Vec<CrossMoment>,
    pub comparisons: Vec<Comparison>,
    pub notes: Vec<String>,
    pub wall_time_seconds: f64,
}

impl ExperimentReport {
    pub fn empty(config: ExperimentConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config,
            columns: Vec::new(),
            replicates: Vec::new(),
            quarantined: Vec::new(),
            summaries: Vec::new(),
            cross_moments: Vec::new(),
            comparisons: Vec::new(),
            notes: Vec::new(),
            wall_time_seconds: 0.0,
        }
    }

    /// No comparison failed (degenerate ones do not count).
    pub fn passed(&self) -> bool {
        self.comparisons.iter().all(|c| c.outcome != Outcome::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Comparison> {
        self.comparisons.iter().filter(|c| c.outcome == Outcome::Fail)
    }

    /// Values of one column across accepted replicates.
    pub fn column(&self, index: usize) -> Vec<f64> {
        self.replicates.iter().map(|r| r.values[index]).collect()
    }

    pub fn column_index(&self, pred: impl Fn(&StatKey) -> bool) -> Option<usize> {
        self.columns.iter().position(pred)
    }

    pub fn find(&self, check: Check, pred: impl Fn(&Comparison) -> bool) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| c.check == check && pred(c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Format(format!("unknown report format {other:?}"))),
        }
    }
}

pub const CSV_HEADER: &str = "row_type,check,statistic,n,r,order,t,other_statistic,other_r,other_t,count,\
mean,mean_se,variance,variance_se,observed,standard_error,target,target_standard_error,target_source,\
tolerance,tolerance_kind,outcome,label";

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn key_fields(k: &StatKey) -> String {
    format!("{},{},{},{},{}", k.statistic.as_str(), k.n, k.r, k.order, num(k.t))
}

fn other_fields(k: Option<&StatKey>) -> String {
    match k {
        Some(k) => format!("{},{},{}", k.statistic.as_str(), k.r, num(k.t)),
        None => ",,".into(),
    }
}

fn to_snake<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

/// CSV with one row per `(n, r, t, statistic)` summary followed by one row
/// per comparison. Blank cells mark fields that do not apply.
pub fn render_csv(report: &ExperimentReport) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in &report.summaries {
        let m = &s.moments;
        let _ = writeln!(
            out,
            "summary,,{},{},{},{},{},{},{}{}",
            key_fields(&s.key),
            other_fields(None),
            m.count,
            num(m.mean),
            num(m.mean_se),
            num(m.variance),
            num(m.variance_se),
            ",".repeat(9),
        );
    }
    for c in &report.comparisons {
        let _ = writeln!(
            out,
            "comparison,{},{},{},,,,,,{},{},{},{},{},{},{},{},{}",
            c.check.as_str(),
            key_fields(&c.key),
            other_fields(c.other.as_ref()),
            num(c.observed),
            num(c.standard_error),
            num(c.target),
            num(c.target_standard_error),
            c.target_source.as_str(),
            num(c.tolerance),
            to_snake(&c.tolerance_kind),
            to_snake(&c.outcome),
            to_snake(&c.label),
        );
    }
    out
}

pub fn render_json(report: &ExperimentReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

pub fn render_report(report: &ExperimentReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => Ok(render_csv(report)),
        ReportFormat::Json => render_json(report),
    }
}

/// Write the report to `path`.
pub fn emit_report(report: &ExperimentReport, format: ReportFormat, path: &Path) -> Result<()> {
    let text = render_report(report, format)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parse a JSON report, rejecting other schema versions.
pub fn parse_json_report(text: &str) -> Result<ExperimentReport> {
    let report: ExperimentReport = serde_json::from_str(text)?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(Error::Format(format!(
            "report schema {} but this build reads {SCHEMA_VERSION}",
            report.schema_version
        )));
    }
    Ok(report)
}
