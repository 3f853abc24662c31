use rand::Rng;
use rand_distr::StandardNormal;

use super::LocalTimeProfile;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Default top-hat bandwidth is `DEFAULT_BANDWIDTH_FACTOR * sqrt(mesh)`.
pub const DEFAULT_BANDWIDTH_FACTOR: f64 = 10.0;

/// Brownian motion sampled at `0, h, 2h, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    mesh: f64,
    values: Vec<f64>,
    seed: u64,
}

impl BrownianPath {
    pub fn from_values(mesh: f64, values: Vec<f64>, seed: u64) -> Result<Self> {
        if !(mesh > 0.0) {
            return Err(Error::arg("mesh", format!("must be positive, got {mesh}")));
        }
        if values.first() != Some(&0.0) {
            return Err(Error::arg("values", "path must start at 0"));
        }
        Ok(Self { mesh, values, seed })
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of increments.
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * self.mesh
    }

    /// The path restricted to `[0, t]` (rounded down to the mesh).
    pub fn prefix(&self, t: f64) -> BrownianPath {
        let k = self.prefix_steps(t);
        BrownianPath {
            mesh: self.mesh,
            values: self.values[..=k].to_vec(),
            seed: self.seed,
        }
    }

    /// Number of increments in `[0, t]`, rounded down to the mesh.
    pub fn prefix_steps(&self, t: f64) -> usize {
        let k = ((t / self.mesh) * (1.0 + 1e-12)).floor() as usize;
        k.min(self.steps())
    }

    pub fn default_bandwidth(&self) -> f64 {
        DEFAULT_BANDWIDTH_FACTOR * self.mesh.sqrt()
    }
}

/// Number of mesh steps covering `[0, t]`, tolerant to `t/mesh` being an
/// integer up to rounding.
fn step_count(t: f64, mesh: f64) -> usize {
    let ratio = t / mesh;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        ratio.ceil() as usize
    }
}

/// Index lookup on an increasing grid. For (nearly) uniform grids the
/// index is guessed arithmetically and then corrected, which gives the
/// same answer as a binary search at O(1) cost.
struct GridLocator<'a> {
    xs: &'a [f64],
    /// `(x_0, 1/dx)` when the grid is uniform to 1%.
    uniform: Option<(f64, f64)>,
}

impl<'a> GridLocator<'a> {
    fn new(xs: &'a [f64]) -> Self {
        let uniform = if xs.len() >= 2 {
            let (lo, hi) = xs
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold((f64::INFINITY, 0.0f64), |(a, b), d| (a.min(d), b.max(d)));
            (hi <= 1.01 * lo).then(|| (xs[0], (xs.len() - 1) as f64 / (xs[xs.len() - 1] - xs[0])))
        } else {
            None
        };
        Self { xs, uniform }
    }

    fn min_spacing(&self) -> Option<f64> {
        self.xs.windows(2).map(|w| w[1] - w[0]).reduce(f64::min)
    }

    /// First index with `x >= v`.
    fn first_at_least(&self, v: f64) -> usize {
        self.guess_and_fix(v, |x| x < v)
    }

    /// First index with `x > v`.
    fn first_above(&self, v: f64) -> usize {
        self.guess_and_fix(v, |x| x <= v)
    }

    fn guess_and_fix(&self, v: f64, before: impl Fn(f64) -> bool) -> usize {
        let g = self.xs.len();
        let Some((x0, inv)) = self.uniform else {
            return self.xs.partition_point(|&x| before(x));
        };
        let guess = ((v - x0) * inv).ceil();
        let mut i = if guess <= 0.0 {
            0
        } else if guess >= g as f64 {
            g
        } else {
            guess as usize
        };
        while i > 0 && !before(self.xs[i - 1]) {
            i -= 1;
        }
        while i < g && before(self.xs[i]) {
            i += 1;
        }
        i
    }
}

/// Brownian path on `[0, T]` with Gaussian increments of variance `mesh`.
pub fn simulate_brownian(horizon: f64, mesh: f64, seed: u64) -> Result<BrownianPath> {
    if !(mesh > 0.0) || !mesh.is_finite() {
        return Err(Error::arg("mesh", format!("must be positive, got {mesh}")));
    }
    if !(horizon >= mesh) || !horizon.is_finite() {
        return Err(Error::arg(
            "T",
            format!("horizon {horizon} must be at least the mesh {mesh}"),
        ));
    }
    let steps = step_count(horizon, mesh);
    let sd = mesh.sqrt();
    let mut rng = rng_from_seed(seed);
    let mut values = Vec::with_capacity(steps + 1);
    let mut w = 0.0;
    values.push(w);
    for _ in 0..steps {
        let z: f64 = rng.sample(StandardNormal);
        w += sd * z;
        values.push(w);
    }
    Ok(BrownianPath { mesh, values, seed })
}

/// Top-hat occupation estimate of local time,
/// `L̂(x) = (mesh / ε) #{k < K : |W_k - x| <= ε/2}`.
///
/// `x_grid` must be increasing. Each sample contributes to a contiguous
/// run of grid points, so the cost is `O(K + G)` on uniform grids.
pub fn occupation_local_time(path: &BrownianPath, x_grid: &[f64], bandwidth: f64) -> Result<LocalTimeProfile> {
    occupation_on_prefix(path, path.steps(), x_grid, bandwidth)
}

/// As [`occupation_local_time`] for the first `steps` increments of `path`,
/// without copying it.
pub(crate) fn occupation_on_prefix(
    path: &BrownianPath,
    steps: usize,
    x_grid: &[f64],
    bandwidth: f64,
) -> Result<LocalTimeProfile> {
    if !(bandwidth > 0.0) {
        return Err(Error::arg("bandwidth", format!("must be positive, got {bandwidth}")));
    }
    if x_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::arg("x_grid", "must be strictly increasing"));
    }
    let samples = &path.values[..steps.min(path.steps())];
    let half = 0.5 * bandwidth;
    let g = x_grid.len();
    let mut diff = vec![0i64; g + 1];
    let locate = GridLocator::new(x_grid);
    let narrow = locate.min_spacing().is_some_and(|dx| bandwidth < dx);
    match locate.uniform {
        // at most one grid point fits in a window, and it is one of the
        // neighbours of the arithmetic guess
        Some((x0, inv)) if narrow => {
            for &w in samples {
                // nearest index by a saturating cast, cheaper than round()
                let j = ((w - x0) * inv + 1.5) as i64 - 1;
                for i in (j - 1).max(0)..=(j + 1).min(g as i64 - 1) {
                    let x = x_grid[i as usize];
                    if x >= w - half && x <= w + half {
                        diff[i as usize] += 1;
                        diff[i as usize + 1] -= 1;
                        break;
                    }
                }
            }
        }
        _ => {
            for &w in samples {
                // grid points x with w - half <= x <= w + half
                let lo = locate.first_at_least(w - half);
                let hi = locate.first_above(w + half);
                if lo < hi {
                    diff[lo] += 1;
                    diff[hi] -= 1;
                }
            }
        }
    }
    let weight = path.mesh / bandwidth;
    let mut running = 0i64;
    let values = diff[..g]
        .iter()
        .map(|d| {
            running += d;
            weight * running as f64
        })
        .collect();
    Ok(LocalTimeProfile {
        x_grid: x_grid.to_vec(),
        values,
        horizon: samples.len() as f64 * path.mesh,
    })
}
