use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::HurstParameter;

/// Which limit statement a run checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Hermite statistics of order `2r - 1`.
    TheoremOdd,
    /// Hermite statistics of order `2r`.
    TheoremEven,
    /// Signed `(2r-1)`-power variation.
    CorollaryOdd,
    /// Centred `2r`-power variation.
    CorollaryEven,
    /// The scenery integral `∫ L_t^x dB_x` on its own.
    BmrsReference,
}

impl Mode {
    pub fn is_odd(self) -> bool {
        matches!(self, Mode::TheoremOdd | Mode::CorollaryOdd)
    }

    pub fn is_even(self) -> bool {
        matches!(self, Mode::TheoremEven | Mode::CorollaryEven)
    }

    pub fn is_corollary(self) -> bool {
        matches!(self, Mode::CorollaryOdd | Mode::CorollaryEven)
    }

    /// Hermite order of the statistic indexed by `r` in theorem modes.
    pub fn hermite_order(self, r: u32) -> u32 {
        if self.is_odd() {
            2 * r - 1
        } else {
            2 * r
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Mode::TheoremOdd => "theorem_odd",
            Mode::TheoremEven => "theorem_even",
            Mode::CorollaryOdd => "corollary_odd",
            Mode::CorollaryEven => "corollary_even",
            Mode::BmrsReference => "bmrs_reference",
        };
        f.write_str(s)
    }
}

/// Settings for the `E ∫ (L_t^x)² dx` oracle used by the even modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Walk level; `None` means two levels above the finest statistic.
    pub level: Option<u32>,
    pub replicates: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            level: None,
            replicates: 4000,
        }
    }
}

/// Grid of the scenery simulator in `bmrs_reference` mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneryConfig {
    pub cutoff: f64,
    pub refinement: u32,
}

impl Default for SceneryConfig {
    fn default() -> Self {
        Self {
            cutoff: 8.0,
            refinement: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub hurst: HurstParameter,
    pub levels: Vec<u32>,
    pub orders: Vec<u32>,
    pub times: Vec<f64>,
    pub replicates: usize,
    pub master_seed: u64,
    /// Thread count for replicate workers. Never affects the output.
    #[serde(skip, default = "one_worker")]
    pub workers: usize,
    pub override_hypotheses: bool,
    pub oracle: OracleConfig,
    pub scenery: SceneryConfig,
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

fn one_worker() -> usize {
    1
}

/// Largest walk level accepted.
pub const MAX_LEVEL: u32 = 24;

/// Largest `r` accepted.
pub const MAX_ORDER: u32 = 8;

impl ExperimentConfig {
    pub fn new(mode: Mode, hurst: HurstParameter) -> Self {
        Self {
            mode,
            hurst,
            levels: vec![12],
            orders: vec![1],
            times: vec![1.0],
            replicates: 1000,
            master_seed: 0,
            workers: 1,
            override_hypotheses: false,
            oracle: OracleConfig::default(),
            scenery: SceneryConfig::default(),
            output: None,
        }
    }

    /// Level used by the local-time oracle.
    pub fn oracle_level(&self) -> u32 {
        self.oracle
            .level
            .unwrap_or_else(|| (self.levels.iter().copied().max().unwrap_or(12) + 2).min(20))
    }

    /// Check the structural constraints and the hypotheses of the mode.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if self.times.is_empty() {
            return bad("at least one time is required".into());
        }
        if self.times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return bad("times must be finite and nonnegative".into());
        }
        if self.times.windows(2).any(|w| w[0] >= w[1]) {
            return bad("times must be strictly increasing".into());
        }
        if self.mode != Mode::BmrsReference {
            if self.levels.is_empty() {
                return bad("at least one level is required".into());
            }
            if let Some(n) = self.levels.iter().find(|&&n| n > MAX_LEVEL) {
                return bad(format!("level {n} exceeds {MAX_LEVEL}"));
            }
            if self.levels.windows(2).any(|w| w[0] >= w[1]) {
                return bad("levels must be strictly increasing".into());
            }
            if self.orders.is_empty() {
                return bad("at least one order is required".into());
            }
            if let Some(r) = self.orders.iter().find(|&&r| r == 0 || r > MAX_ORDER) {
                return bad(format!("order r = {r} outside 1..={MAX_ORDER}"));
            }
            if self.orders.windows(2).any(|w| w[0] >= w[1]) {
                return bad("orders must be strictly increasing".into());
            }
        } else if !(self.scenery.cutoff > 0.0) || self.scenery.refinement < 4 {
            return bad("scenery needs cutoff > 0 and refinement >= 4".into());
        }
        if self.mode.is_even() || self.mode == Mode::BmrsReference {
            if self.oracle.replicates < 2 {
                return bad("oracle needs at least 2 replicates".into());
            }
            if self.oracle_level() > MAX_LEVEL {
                return bad(format!("oracle level exceeds {MAX_LEVEL}"));
            }
        }
        if !self.override_hypotheses {
            let h = self.hurst.value();
            if self.mode.is_odd() && h > 0.5 {
                return bad(format!(
                    "{} assumes H <= 1/2, got H = {h} (use the override flag to run anyway)",
                    self.mode
                ));
            }
            if self.mode.is_even() && h >= 0.75 {
                return bad(format!(
                    "{} assumes H < 3/4, got H = {h} (use the override flag to run anyway)",
                    self.mode
                ));
            }
        }
        Ok(())
    }
}
