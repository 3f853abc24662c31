//! Exact Gaussian sampling: fractional Gaussian noise, fractional Brownian
//! motion on grids and at arbitrary points, and the unit-lag increment
//! covariance.

mod export;
mod fbm;
mod fgn;

pub use export::{
    decode_fgn_binary, encode_fgn_binary, read_fgn_binary, write_fgn_binary, write_fgn_csv, write_grid_csv,
    BINARY_MAGIC, BINARY_VERSION,
};
pub use fbm::{
    fbm_at_points, fbm_at_points_with_cap, fbm_covariance, fbm_grid_from_fgn, two_sided_fbm, TwoSidedFbmGrid,
    DEFAULT_POINT_CAP, JITTER,
};
pub use fgn::{sample_fgn, sample_fgn_window, FgnPath, FgnWindow, EIGENVALUE_TOLERANCE};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hurst index, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct HurstParameter(f64);

impl HurstParameter {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidHurst(value))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// `2H`, the exponent appearing in every covariance formula.
    #[inline]
    pub fn twice(self) -> f64 {
        2.0 * self.0
    }

    pub fn is_brownian(self) -> bool {
        self.0 == 0.5
    }
}

impl TryFrom<f64> for HurstParameter {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<HurstParameter> for f64 {
    fn from(h: HurstParameter) -> f64 {
        h.0
    }
}

impl std::fmt::Display for HurstParameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Autocovariance of unit-lag fractional Gaussian noise,
/// `½(|k+1|^{2H} + |k-1|^{2H} - 2|k|^{2H})`.
pub fn rho(h: HurstParameter, k: i64) -> f64 {
    let k = k.unsigned_abs();
    if k == 0 {
        return 1.0;
    }
    let e = h.twice();
    if k < 4 {
        let k = k as f64;
        return 0.5 * ((k + 1.0).powf(e) + (k - 1.0).powf(e) - 2.0 * k.powf(e));
    }
    // For large k the direct second difference cancels catastrophically.
    // Expand (1+x)^e + (1-x)^e - 2 = 2 * sum_{j>=1} C(e, 2j) x^{2j}, x = 1/k.
    let kf = k as f64;
    let x2 = 1.0 / (kf * kf);
    let mut binom = 1.0; // C(e, i)
    let mut power = 1.0; // x^{2j}
    let mut acc = 0.0;
    for j in 1..64 {
        let i = 2 * j - 2;
        binom *= (e - i as f64) / (i as f64 + 1.0);
        binom *= (e - (i + 1) as f64) / (i as f64 + 2.0);
        power *= x2;
        let term = binom * power;
        acc += term;
        if term.abs() <= 1e-18 * acc.abs() {
            break;
        }
    }
    kf.powf(e) * acc
}

/// `(K+1)^{2H} - K^{2H}`, evaluated without cancellation. Equals
/// `sum_{|a|<=K} rho(a)`.
pub fn rho_partial_sum(h: HurstParameter, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let kf = k as f64;
    kf.powf(h.twice()) * (h.twice() * (1.0 / kf).ln_1p()).exp_m1()
}

/// Strictly increasing set of evaluation times (negatives allowed).
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet(Vec<f64>);

impl PointSet {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        for (i, w) in points.windows(2).enumerate() {
            if !(w[0] < w[1]) {
                return Err(Error::UnsortedPoints { index: i + 1 });
            }
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::arg("points", format!("non-finite point at index {i}")));
        }
        Ok(Self(points))
    }

    /// Sort and drop exact duplicates.
    pub fn from_unsorted(mut points: Vec<f64>) -> Result<Self> {
        points.sort_by(f64::total_cmp);
        points.dedup();
        Self::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of `x` if it is an element of the set.
    pub fn position(&self, x: f64) -> Option<usize> {
        self.0.binary_search_by(|p| p.total_cmp(&x)).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn h(v: f64) -> HurstParameter {
        HurstParameter::new(v).unwrap()
    }

    #[test]
    fn hurst_bounds() {
        assert!(HurstParameter::new(0.0).is_err());
        assert!(HurstParameter::new(1.0).is_err());
        assert!(HurstParameter::new(f64::NAN).is_err());
        assert_eq!(h(0.3).value(), 0.3);
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho(h(0.5), 0), 1.0);
        assert_eq!(rho(h(0.5), 3), 0.0);
        assert_relative_eq!(rho(h(0.75), 1), 2f64.sqrt() - 1.0, epsilon = 1e-15);
        assert_relative_eq!(rho(h(0.7), 1), 2f64.powf(0.4) - 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rho_partial_sums_telescope() {
        for hv in [0.3, 0.5, 0.7] {
            let hp = h(hv);
            let mut acc = crate::numeric::CompensatedSum::new();
            acc.add(rho(hp, 0));
            let mut checked = 0;
            for k in 1..=10_000i64 {
                acc.add(2.0 * rho(hp, k));
                if [10, 100, 1000, 10_000].contains(&k) {
                    // Independent route: (K+1)^{2H} - K^{2H} through expm1/ln1p.
                    let kf = k as f64;
                    let expect = kf.powf(2.0 * hv) * (2.0 * hv * (1.0 / kf).ln_1p()).exp_m1();
                    assert!((acc.value() - expect).abs() <= 1e-12, "H={hv} K={k}");
                    checked += 1;
                }
            }
            assert_eq!(checked, 4);
        }
    }

    #[test]
    fn rho_series_branch_matches_direct_formula() {
        for hv in [0.1, 0.3, 0.5, 0.7, 0.9] {
            for k in 4..40i64 {
                let kf = k as f64;
                let e = 2.0 * hv;
                let direct = 0.5 * ((kf + 1.0).powf(e) + (kf - 1.0).powf(e) - 2.0 * kf.powf(e));
                assert!((rho(h(hv), k) - direct).abs() < 1e-12, "H={hv} k={k}");
            }
        }
    }

    #[test]
    fn partial_sum_closed_form() {
        assert_eq!(rho_partial_sum(h(0.3), 0), 1.0);
        assert_relative_eq!(rho_partial_sum(h(0.5), 17), 1.0, epsilon = 1e-14);
        assert_relative_eq!(rho_partial_sum(h(0.7), 1), 2f64.powf(1.4) - 1.0, epsilon = 1e-14);
    }

    #[test]
    fn point_set_validation() {
        assert!(PointSet::new(vec![0.0, 0.0]).is_err());
        assert!(PointSet::new(vec![1.0, 0.5]).is_err());
        let p = PointSet::from_unsorted(vec![2.0, -1.0, 2.0, 0.0]).unwrap();
        assert_eq!(p.points(), &[-1.0, 0.0, 2.0]);
        assert_eq!(p.position(0.0), Some(1));
        assert_eq!(p.position(0.5), None);
    }

    proptest! {
        #[test]
        fn rho_is_symmetric(hv in 0.01f64..0.99, k in -5000i64..5000) {
            let hp = h(hv);
            prop_assert_eq!(rho(hp, k), rho(hp, -k));
        }

        #[test]
        fn rho_bounded_by_one(hv in 0.01f64..0.99, k in -5000i64..5000) {
            prop_assert!(rho(h(hv), k).abs() <= 1.0 + 1e-15);
        }
    }
}
