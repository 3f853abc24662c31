use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::rng::{derive_seed, stream, substream, SimRng};
use crate::walk::{count_crossings, occupation_local_time, simulate_brownian, simulate_walk, DyadicLevel};

/// `E_t = B(Y_t)` at each `t` in `times`, with `B` a two-sided Brownian
/// motion independent of `Y`.
///
/// `Y` is built from sequential Gaussian increments; `B` is then sampled
/// at the realised values of `Y`, separately on each half-line, by
/// sequential increments in order of increasing `|y|`.
pub fn simulate_b_of_y(times: &[f64], seed: u64) -> Result<Vec<f64>> {
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::arg("t", "times must be finite and nonnegative"));
    }
    if times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::arg("t", "times must be nondecreasing"));
    }
    let mut rng_y = substream(seed, &[stream::BROWNIAN]);
    let mut y = Vec::with_capacity(times.len());
    let (mut prev_t, mut acc) = (0.0, 0.0);
    for &t in times {
        let z: f64 = rng_y.sample(StandardNormal);
        acc += (t - prev_t).sqrt() * z;
        prev_t = t;
        y.push(acc);
    }

    let mut rng_b = substream(seed, &[stream::SCENERY]);
    let mut out = vec![0.0; times.len()];
    for side in [1.0, -1.0] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] * side > 0.0).collect();
        idx.sort_by(|&a, &b| (y[a] * side).total_cmp(&(y[b] * side)));
        let (mut level, mut b) = (0.0, 0.0);
        for i in idx {
            let x = y[i] * side;
            let z: f64 = rng_b.sample(StandardNormal);
            b += (x - level).sqrt() * z;
            level = x;
            out[i] = b;
        }
    }
    Ok(out)
}

/// One draw of the Riemann-Itô sum `Σ_j L_t^{jδ}(Y) (B_{(j+1)δ} - B_{jδ})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneryIntegral {
    pub horizon: f64,
    pub cutoff: f64,
    pub refinement: u32,
    pub value: f64,
    /// `Σ_j L(jδ)² δ`, the variance of `value` given `Y`.
    pub conditional_variance: f64,
    pub seed: u64,
}

fn scenery_sum(local_time: &[f64], spacing: f64, rng: &mut SimRng) -> (f64, f64) {
    let sd = spacing.sqrt();
    let mut value = CompensatedSum::new();
    let mut var = CompensatedSum::new();
    for &l in local_time {
        let z: f64 = rng.sample(StandardNormal);
        value.add(l * sd * z);
        var.add(l * l * spacing);
    }
    (value.value(), var.value())
}

/// Brownian motion in random scenery on the grid `jδ`, `δ = 2^{-m/2}`,
/// `|jδ| <= p`.
///
/// `Y` is simulated on the mesh `2^{-m-4}` (so `mesh = δ²/16`) and its
/// local time estimated with a top-hat of width `δ`. `Y` and `B` come from
/// distinct substreams of `seed`.
pub fn simulate_scenery_integral(t: f64, p: f64, m: u32, seed: u64) -> Result<SceneryIntegral> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::arg("p", format!("cutoff must be positive, got {p}")));
    }
    if m < 4 {
        return Err(Error::arg("m", format!("refinement must be at least 4, got {m}")));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::arg("t", format!("must be finite and nonnegative, got {t}")));
    }
    let empty = SceneryIntegral {
        horizon: t,
        cutoff: p,
        refinement: m,
        value: 0.0,
        conditional_variance: 0.0,
        seed,
    };
    let mesh = (-(m as f64) - 4.0).exp2();
    if t < mesh {
        return Ok(empty);
    }
    let spacing = (-(m as f64) / 2.0).exp2();
    let path = simulate_brownian(t, mesh, derive_seed(seed, &[stream::BROWNIAN]))?;
    let half = (p / spacing).floor() as i64;
    let grid: Vec<f64> = (-half..=half).map(|j| j as f64 * spacing).collect();
    let lt = occupation_local_time(&path, &grid, spacing)?;
    let mut rng = substream(seed, &[stream::SCENERY]);
    let (value, conditional_variance) = scenery_sum(&lt.values, spacing, &mut rng);
    Ok(SceneryIntegral {
        value,
        conditional_variance,
        ..empty
    })
}

/// `Σ_j L_j sqrt(δ) N_j` for a fixed local-time profile, with fresh
/// Gaussian scenery from `seed`.
pub fn simulate_scenery_given_profile(local_time: &[f64], spacing: f64, seed: u64) -> f64 {
    let mut rng = substream(seed, &[stream::SCENERY]);
    scenery_sum(local_time, spacing, &mut rng).0
}

/// Monte-Carlo estimate of a mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub replicates: usize,
    pub level: u32,
}

/// Estimate `E ∫ (L_t^x)² dx` from random-walk local time at level `n`:
/// `Σ_j 𝓛_{j,n}² 2^{-n/2}` with `𝓛_{j,n} = 2^{-n/2}(U_j + D_j)`.
pub fn local_time_square_oracle(t: f64, n: u32, replicates: usize, seed: u64) -> Result<OracleEstimate> {
    if replicates < 2 {
        return Err(Error::TooFewSamples {
            min: 2,
            got: replicates,
        });
    }
    let level = DyadicLevel::new(n);
    let k = level.steps_for(t)?;
    if k == 0 {
        return Err(Error::arg("t", "horizon shorter than one step"));
    }
    let delta = level.spacing();
    let draws: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| -> Result<f64> {
            let walk = simulate_walk(level, k, derive_seed(seed, &[stream::ORACLE, rep]))?;
            let counts = count_crossings(&walk, k)?;
            let s: CompensatedSum = counts
                .iter()
                .map(|(_, u, d)| {
                    let l = delta * (u + d) as f64;
                    l * l * delta
                })
                .collect();
            Ok(s.value())
        })
        .collect::<Result<_>>()?;
    let m = draws.len() as f64;
    let mean = draws.iter().copied().collect::<CompensatedSum>().value() / m;
    let var = draws
        .iter()
        .map(|x| (x - mean).powi(2))
        .collect::<CompensatedSum>()
        .value()
        / (m - 1.0);
    Ok(OracleEstimate {
        mean,
        standard_error: (var / m).sqrt(),
        replicates,
        level: n,
    })
}
