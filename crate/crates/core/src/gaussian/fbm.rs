use rand::Rng;
use rand_distr::StandardNormal;

use super::{sample_fgn, FgnPath, HurstParameter, PointSet};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Default maximum number of points for dense sampling.
pub const DEFAULT_POINT_CAP: usize = 4096;

/// Diagonal jitter added before the Cholesky factorisation.
pub const JITTER: f64 = 1e-12;

const PIVOT_FLOOR: f64 = 4.0 * JITTER;

/// fBm sampled on `{jδ : lo <= j <= hi}` with `X_0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSidedFbmGrid {
    hurst: HurstParameter,
    step: f64,
    lo: i64,
    values: Vec<f64>,
}

impl TwoSidedFbmGrid {
    pub fn hurst(&self) -> HurstParameter {
        self.hurst
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Inclusive index range.
    pub fn index_range(&self) -> (i64, i64) {
        (self.lo, self.lo + self.values.len() as i64 - 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, j: i64) -> Option<f64> {
        usize::try_from(j - self.lo)
            .ok()
            .and_then(|i| self.values.get(i).copied())
    }

    /// `(time, value)` pairs in index order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.lo + i as i64, v))
    }
}

fn check_step(step: f64) -> Result<()> {
    if step > 0.0 && step.is_finite() {
        Ok(())
    } else {
        Err(Error::arg("step", format!("must be positive and finite, got {step}")))
    }
}

/// One-sided fBm on `{0, δ, ..., mδ}`: `X_{jδ} = δ^H (G_1 + ... + G_j)`.
pub fn fbm_grid_from_fgn(path: &FgnPath, step: f64) -> Result<TwoSidedFbmGrid> {
    check_step(step)?;
    let scale = step.powf(path.hurst().value());
    let mut values = Vec::with_capacity(path.len() + 1);
    let mut acc = 0.0;
    values.push(0.0);
    for g in path.values() {
        acc += g;
        values.push(scale * acc);
    }
    Ok(TwoSidedFbmGrid {
        hurst: path.hurst(),
        step,
        lo: 0,
        values,
    })
}

/// Two-sided fBm on `{jδ : -J <= j <= J}`.
///
/// One stationary fGn sequence of length `2J` is summed over the whole
/// grid and re-anchored at index 0, so the joint law is that of fBm on ℝ.
pub fn two_sided_fbm(h: HurstParameter, half: usize, step: f64, seed: u64) -> Result<TwoSidedFbmGrid> {
    if half == 0 {
        return Err(Error::EmptyGrid);
    }
    check_step(step)?;
    let path = sample_fgn(h, 2 * half, seed)?;
    let scale = step.powf(h.value());
    let mut partial = Vec::with_capacity(2 * half + 1);
    let mut acc = 0.0;
    partial.push(0.0);
    for g in path.values() {
        acc += g;
        partial.push(acc);
    }
    let anchor = partial[half];
    let values = partial.iter().map(|s| scale * (s - anchor)).collect::<Vec<_>>();
    let mut grid = TwoSidedFbmGrid {
        hurst: h,
        step,
        lo: -(half as i64),
        values,
    };
    grid.values[half] = 0.0;
    Ok(grid)
}

/// `Cov(X_s, X_t) = ½(|s|^{2H} + |t|^{2H} - |t-s|^{2H})`.
pub fn fbm_covariance(h: HurstParameter, s: f64, t: f64) -> f64 {
    let e = h.twice();
    0.5 * (s.abs().powf(e) + t.abs().powf(e) - (t - s).abs().powf(e))
}

/// Joint exact sample of fBm at arbitrary points, with the default cap.
pub fn fbm_at_points(h: HurstParameter, pts: &PointSet, seed: u64) -> Result<Vec<f64>> {
    fbm_at_points_with_cap(h, pts, seed, DEFAULT_POINT_CAP)
}

/// Joint exact sample of fBm at arbitrary points via dense Cholesky.
///
/// A point at exactly 0 gets the value 0 and is left out of the
/// factorisation.
pub fn fbm_at_points_with_cap(h: HurstParameter, pts: &PointSet, seed: u64, cap: usize) -> Result<Vec<f64>> {
    if pts.len() > cap {
        return Err(Error::TooManyPoints { len: pts.len(), cap });
    }
    let active: Vec<(usize, f64)> = pts
        .points()
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, p)| p != 0.0)
        .collect();
    let m = active.len();
    let mut l = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let mut s = fbm_covariance(h, active[i].1, active[j].1);
            if i == j {
                s += JITTER;
            }
            for k in 0..j {
                s -= l[i * m + k] * l[j * m + k];
            }
            if i == j {
                // A residual variance of order the jitter means the point is
                // numerically a duplicate of an earlier one.
                if !(s > PIVOT_FLOOR) {
                    let x = active[i].1;
                    let nearest = pts
                        .points()
                        .iter()
                        .copied()
                        .filter(|&p| p != x)
                        .min_by(|a, b| (a - x).abs().total_cmp(&(b - x).abs()))
                        .unwrap_or(0.0);
                    let (left, right) = if nearest < x { (nearest, x) } else { (x, nearest) };
                    return Err(Error::NotPositiveDefinite {
                        pivot: active[i].0,
                        left,
                        right,
                    });
                }
                l[i * m + i] = s.sqrt();
            } else {
                l[i * m + j] = s / l[j * m + j];
            }
        }
    }
    let mut rng = rng_from_seed(seed);
    let z: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
    let mut out = vec![0.0; pts.len()];
    for (i, &(idx, _)) in active.iter().enumerate() {
        out[idx] = (0..=i).map(|k| l[i * m + k] * z[k]).sum();
    }
    Ok(out)
}
