//! The stopping-time skeleton of the Brownian clock.
//!
//! Sampling `Y` each time it hits a new point of the grid
//! `{j 2^{-n/2} : j ∈ ℤ}` yields a simple symmetric random walk. Everything
//! here is kept in integer grid indices; the spacing only enters when a
//! physical level or local time is reported.

mod brownian;
mod coupled;
mod export;

pub use brownian::{occupation_local_time, simulate_brownian, BrownianPath, DEFAULT_BANDWIDTH_FACTOR};
pub use coupled::{crossing_vs_occupation_discrepancy, skeleton_from_path, CoupledSkeleton};
pub use export::{write_counts_csv, write_profile_csv};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Grid of order `n/2`: spacing `2^{-n/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicLevel {
    n: u32,
}

impl DyadicLevel {
    pub fn new(n: u32) -> Self {
        Self { n }
    }

    pub fn n(self) -> u32 {
        self.n
    }

    pub fn spacing(self) -> f64 {
        (-(self.n as f64) / 2.0).exp2()
    }

    /// `⌊2^n t⌋`, the number of walk steps that stand in for `[0, t]`.
    pub fn steps_for(self, t: f64) -> Result<usize> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::arg("t", format!("horizon must be finite and >= 0, got {t}")));
        }
        Ok(((self.n as f64).exp2() * t).floor() as usize)
    }
}

/// Integer positions `s_0 = 0, s_1, ..., s_K` of the skeleton walk.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicWalk {
    level: DyadicLevel,
    steps: Vec<i64>,
    seed: u64,
}

impl DyadicWalk {
    /// Build from explicit positions; checks `s_0 = 0` and unit steps.
    pub fn from_positions(level: DyadicLevel, steps: Vec<i64>, seed: u64) -> Result<Self> {
        if steps.first() != Some(&0) {
            return Err(Error::arg("steps", "walk must start at 0"));
        }
        if let Some(k) = steps.windows(2).position(|w| (w[1] - w[0]).abs() != 1) {
            return Err(Error::arg("steps", format!("step {k} is not ±1")));
        }
        Ok(Self { level, steps, seed })
    }

    pub fn level(&self) -> DyadicLevel {
        self.level
    }

    pub fn positions(&self) -> &[i64] {
        &self.steps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of steps `K` (one less than the number of positions).
    pub fn len(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Min and max position over the first `k` steps.
    pub fn range(&self, k: usize) -> (i64, i64) {
        self.steps[..=k.min(self.len())]
            .iter()
            .fold((0, 0), |(lo, hi), &s| (lo.min(s), hi.max(s)))
    }

    fn check_horizon(&self, k: usize) -> Result<()> {
        if k > self.len() {
            Err(Error::HorizonTooLong {
                requested: k,
                available: self.len(),
            })
        } else {
            Ok(())
        }
    }
}

/// Fair ±1 walk of `k` steps; one random bit per step.
pub fn simulate_walk(level: DyadicLevel, k: usize, seed: u64) -> Result<DyadicWalk> {
    if k == 0 {
        return Err(Error::arg("K", "walk needs at least one step"));
    }
    let mut rng = rng_from_seed(seed);
    let mut steps = Vec::with_capacity(k + 1);
    steps.push(0i64);
    let mut pos = 0i64;
    let mut remaining = k;
    while remaining > 0 {
        let mut bits = rng.next_u64();
        let take = remaining.min(64);
        for _ in 0..take {
            pos += ((bits & 1) as i64) * 2 - 1;
            bits >>= 1;
            steps.push(pos);
        }
        remaining -= take;
    }
    Ok(DyadicWalk { level, steps, seed })
}

/// `j*(n, t) = 2^{n/2} Y_{T_{⌊2^n t⌋, n}}`, i.e. the walk position after
/// `⌊2^n t⌋` steps.
pub fn endpoint_index(walk: &DyadicWalk, t: f64) -> Result<i64> {
    let k = walk.level.steps_for(t)?;
    walk.check_horizon(k)?;
    Ok(walk.steps[k])
}

/// Up- and down-crossing tallies of each grid cell `[j, j+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingCounts {
    level: DyadicLevel,
    horizon: usize,
    first_cell: i64,
    tallies: Vec<(u64, u64)>,
}

impl CrossingCounts {
    pub fn level(&self) -> DyadicLevel {
        self.level
    }

    /// Number of walk steps tallied.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Inclusive range of cells that may be nonzero; `None` if empty.
    pub fn support(&self) -> Option<(i64, i64)> {
        if self.tallies.is_empty() {
            None
        } else {
            Some((self.first_cell, self.first_cell + self.tallies.len() as i64 - 1))
        }
    }

    fn get(&self, j: i64) -> (u64, u64) {
        usize::try_from(j - self.first_cell)
            .ok()
            .and_then(|i| self.tallies.get(i).copied())
            .unwrap_or((0, 0))
    }

    pub fn up(&self, j: i64) -> u64 {
        self.get(j).0
    }

    pub fn down(&self, j: i64) -> u64 {
        self.get(j).1
    }

    /// `U_j - D_j`.
    pub fn net(&self, j: i64) -> i64 {
        let (u, d) = self.get(j);
        u as i64 - d as i64
    }

    /// `U_j + D_j`.
    pub fn total(&self, j: i64) -> u64 {
        let (u, d) = self.get(j);
        u + d
    }

    /// `(j, U_j, D_j)` in ascending `j`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, u64, u64)> + '_ {
        self.tallies
            .iter()
            .enumerate()
            .map(move |(i, &(u, d))| (self.first_cell + i as i64, u, d))
    }
}

/// Tally the crossings made during the first `k` steps of `walk`.
pub fn count_crossings(walk: &DyadicWalk, k: usize) -> Result<CrossingCounts> {
    walk.check_horizon(k)?;
    let (lo, hi) = walk.range(k);
    let mut tallies = vec![(0u64, 0u64); (hi - lo) as usize];
    for w in walk.steps[..=k].windows(2) {
        if w[1] > w[0] {
            tallies[(w[0] - lo) as usize].0 += 1;
        } else {
            tallies[(w[1] - lo) as usize].1 += 1;
        }
    }
    Ok(CrossingCounts {
        level: walk.level,
        horizon: k,
        first_cell: lo,
        tallies,
    })
}

/// Local time sampled on a grid of levels.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeProfile {
    pub x_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub horizon: f64,
}

impl LocalTimeProfile {
    /// Trapezoidal `∫ L(x) dx`.
    pub fn integral(&self) -> f64 {
        crate::numeric::trapezoid(&self.x_grid, &self.values)
    }

    /// Trapezoidal `∫ L(x)^2 dx`.
    pub fn square_integral(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v * v).collect();
        crate::numeric::trapezoid(&self.x_grid, &sq)
    }

    /// Value at the grid point closest to `x`.
    pub fn nearest(&self, x: f64) -> Option<f64> {
        let i = self.x_grid.partition_point(|&g| g < x);
        let candidates = [i.checked_sub(1), Some(i)];
        candidates
            .into_iter()
            .flatten()
            .filter(|&i| i < self.x_grid.len())
            .min_by(|&a, &b| (self.x_grid[a] - x).abs().total_cmp(&(self.x_grid[b] - x).abs()))
            .map(|i| self.values[i])
    }
}

/// Crossing-count local time `𝓛_{j,n} = 2^{-n/2} (U_j + D_j)` at levels
/// `j 2^{-n/2}`.
pub fn walk_local_time(counts: &CrossingCounts) -> LocalTimeProfile {
    let spacing = counts.level.spacing();
    let (x_grid, values) = counts
        .iter()
        .map(|(j, u, d)| (j as f64 * spacing, spacing * (u + d) as f64))
        .unzip();
    LocalTimeProfile {
        x_grid,
        values,
        horizon: counts.horizon as f64 * (-(counts.level.n as f64)).exp2(),
    }
}
