//! Sample statistics used by the aggregator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Smallest sample accepted by [`ks_distance`].
pub const MIN_KS_SAMPLES: usize = 100;

/// Mean and variance of a sample with Monte-Carlo standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMoments {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub mean_se: f64,
    /// `sqrt((m_4 - s^4) / M)`.
    pub variance_se: f64,
}

impl SampleMoments {
    pub fn from_slice(xs: &[f64]) -> Self {
        let m = xs.len();
        if m == 0 {
            return Self {
                count: 0,
                mean: 0.0,
                variance: 0.0,
                mean_se: 0.0,
                variance_se: 0.0,
            };
        }
        let mf = m as f64;
        let mean = xs.iter().copied().collect::<CompensatedSum>().value() / mf;
        if m == 1 {
            return Self {
                count: 1,
                mean,
                variance: 0.0,
                mean_se: 0.0,
                variance_se: 0.0,
            };
        }
        let mut s2 = CompensatedSum::new();
        let mut s4 = CompensatedSum::new();
        for &x in xs {
            let d2 = (x - mean).powi(2);
            s2.add(d2);
            s4.add(d2 * d2);
        }
        let variance = s2.value() / (mf - 1.0);
        let m4 = s4.value() / mf;
        let biased = s2.value() / mf;
        Self {
            count: m,
            mean,
            variance,
            mean_se: (variance / mf).sqrt(),
            variance_se: ((m4 - biased * biased).max(0.0) / mf).sqrt(),
        }
    }
}

/// Sample covariance.
pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let m = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().copied().collect::<CompensatedSum>().value() / m;
    let my = ys.iter().copied().collect::<CompensatedSum>().value() / m;
    xs.iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .collect::<CompensatedSum>()
        .value()
        / (m - 1.0)
}

/// Pearson correlation; 0 when either sample is constant.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let vx = covariance(xs, xs);
    let vy = covariance(ys, ys);
    if vx <= 0.0 || vy <= 0.0 {
        0.0
    } else {
        covariance(xs, ys) / (vx * vy).sqrt()
    }
}

/// `sup_x |F_M(x) - F(x)|` for the empirical CDF `F_M` of `samples`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.len() < MIN_KS_SAMPLES {
        return Err(Error::TooFewSamples {
            min: MIN_KS_SAMPLES,
            got: samples.len(),
        });
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::arg("samples", "NaN in sample"));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < xs.len() {
        // ties: the empirical CDF jumps by the whole run at once
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[i] {
            j += 1;
        }
        let f = cdf(xs[i]);
        d = d.max((f - i as f64 / m).abs()).max(((j + 1) as f64 / m - f).abs());
        i = j + 1;
    }
    Ok(d)
}
