//! Probabilists' Hermite polynomials and the expansion of monomials in the
//! Hermite basis.
//!
//! Factorials are evaluated in double precision by iterated products; the
//! largest factorial that fits is `170!`, which bounds the admissible
//! degrees below.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest degree accepted by [`power_to_hermite`].
pub const MAX_POWER: u32 = 60;

/// Largest order accepted by [`gaussian_even_moment`].
pub const MAX_MOMENT_ORDER: u32 = 30;

const MAX_FACTORIAL: u32 = 170;

/// `n!` in double precision.
pub fn factorial(n: u32) -> f64 {
    debug_assert!(n <= MAX_FACTORIAL);
    (2..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `H_r(x)` via `H_{k+1}(x) = x H_k(x) - k H_{k-1}(x)`.
pub fn hermite_eval(r: u32, x: f64) -> f64 {
    match r {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for k in 1..r {
                let next = x * cur - k as f64 * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `H_r(x)` from the explicit sum
/// `Σ_{l ≤ r/2} r! (-1)^l / (l! (r-2l)! 2^l) x^{r-2l}`.
pub fn hermite_eval_explicit(r: u32, x: f64) -> f64 {
    let rf = factorial(r);
    (0..=r / 2)
        .map(|l| {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            sign * rf / (factorial(l) * factorial(r - 2 * l) * 2f64.powi(l as i32)) * x.powi((r - 2 * l) as i32)
        })
        .sum()
}

/// All of `H_0(x), ..., H_r(x)`.
pub fn hermite_all(r: u32, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(r as usize + 1);
    out.push(1.0);
    if r >= 1 {
        out.push(x);
    }
    for k in 1..r as usize {
        out.push(x * out[k] - k as f64 * out[k - 1]);
    }
    out
}

/// `E[N^q]` for `N ~ N(0, 1)`.
fn normal_moment(q: u32) -> f64 {
    if q % 2 == 1 {
        0.0
    } else {
        // (q-1)!!
        (1..q).step_by(2).fold(1.0, |acc, k| acc * k as f64)
    }
}

/// `E[N^{2r}] = (2r)! / (2^r r!)`.
pub fn gaussian_even_moment(r: u32) -> Result<f64> {
    if r > MAX_MOMENT_ORDER {
        return Err(Error::DegreeTooLarge {
            degree: r,
            max: MAX_MOMENT_ORDER,
        });
    }
    Ok(factorial(2 * r) / (2f64.powi(r as i32) * factorial(r)))
}

/// Coefficients `a_{p,0..=p}` with `x^p = Σ_k a_{p,k} H_k(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteExpansion {
    pub p: u32,
    pub coeffs: Vec<f64>,
}

impl HermiteExpansion {
    pub fn coeff(&self, k: u32) -> f64 {
        self.coeffs.get(k as usize).copied().unwrap_or(0.0)
    }

    /// `Σ_k a_{p,k} H_k(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        hermite_all(self.p, x)
            .iter()
            .zip(&self.coeffs)
            .map(|(h, a)| h * a)
            .sum()
    }

    /// Smallest `k` with a nonzero coefficient among `k >= 1`.
    pub fn rank_above_constant(&self) -> Option<u32> {
        (1..=self.p).find(|&k| self.coeff(k) != 0.0)
    }
}

/// Expand `x^p` in the Hermite basis using
/// `a_{p,k} = (1/k!) E[N^p H_k(N)] = Σ_{l ≤ k/2} (-1)^l E[N^{p+k-2l}] / (l! (k-2l)! 2^l)`.
pub fn power_to_hermite(p: u32) -> Result<HermiteExpansion> {
    if p > MAX_POWER {
        return Err(Error::DegreeTooLarge {
            degree: p,
            max: MAX_POWER,
        });
    }
    let coeffs = (0..=p)
        .map(|k| {
            if (p + k) % 2 == 1 {
                return 0.0;
            }
            (0..=k / 2)
                .map(|l| {
                    let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
                    sign * normal_moment(p + k - 2 * l) / (factorial(l) * factorial(k - 2 * l) * 2f64.powi(l as i32))
                })
                .sum()
        })
        .collect();
    Ok(HermiteExpansion { p, coeffs })
}

fn check_range(k: u32, lo: u32, hi: u32) -> Result<()> {
    if k < lo || k > hi {
        Err(Error::IndexOutOfRange { k, lo, hi })
    } else {
        Ok(())
    }
}

/// Weight of `H_{2k-1}` in `x^{2r-1}`, for `1 <= k <= r`:
/// `Σ_{l<k} (-1)^l (2(r+k-l-1))! / (l! (2(k-l)-1)! (r+k-l-1)! 2^{r+k-1})`.
pub fn corollary_coeff_odd(r: u32, k: u32) -> Result<f64> {
    if r == 0 {
        return Err(Error::arg("r", "order must be positive"));
    }
    check_range(k, 1, r)?;
    if 2 * (r + k - 1) > MAX_FACTORIAL {
        return Err(Error::DegreeTooLarge {
            degree: 2 * r - 1,
            max: MAX_POWER,
        });
    }
    let denom_pow = 2f64.powi((r + k - 1) as i32);
    Ok((0..k)
        .map(|l| {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            sign * factorial(2 * (r + k - l - 1))
                / (factorial(l) * factorial(2 * (k - l) - 1) * factorial(r + k - l - 1) * denom_pow)
        })
        .sum())
}

/// Weight of `H_{2k}` in `x^{2r}`, for `0 <= k <= r`:
/// `Σ_{l≤k} (-1)^l (2(r+k-l))! / (l! (2(k-l))! (r+k-l)! 2^{r+k})`.
pub fn corollary_coeff_even(r: u32, k: u32) -> Result<f64> {
    if r == 0 {
        return Err(Error::arg("r", "order must be positive"));
    }
    check_range(k, 0, r)?;
    if 2 * (r + k) > MAX_FACTORIAL {
        return Err(Error::DegreeTooLarge {
            degree: 2 * r,
            max: MAX_POWER,
        });
    }
    let denom_pow = 2f64.powi((r + k) as i32);
    Ok((0..=k)
        .map(|l| {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            sign * factorial(2 * (r + k - l))
                / (factorial(l) * factorial(2 * (k - l)) * factorial(r + k - l) * denom_pow)
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::adaptive_simpson;
    use approx::assert_relative_eq;

    fn gaussian_expectation<F: Fn(f64) -> f64>(f: F) -> f64 {
        let g = |x: f64| f(x) * (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        // unit panels so the initial Simpson sample cannot miss the bulk
        (-40..40)
            .map(|a| adaptive_simpson(&g, a as f64, a as f64 + 1.0, 1e-13))
            .sum()
    }

    #[test]
    fn low_order_values() {
        assert_eq!(hermite_eval(0, 3.0), 1.0);
        assert_eq!(hermite_eval(1, 7.3), 7.3);
        assert_eq!(hermite_eval(2, 2.0), 3.0);
        assert_eq!(hermite_eval(3, 1.0), -2.0);
    }

    #[test]
    fn recurrence_matches_explicit_sum() {
        for r in 0..=12 {
            for i in -20..=20 {
                let x = i as f64 * 0.5;
                let a = hermite_eval(r, x);
                let b = hermite_eval_explicit(r, x);
                assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "r={r} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn hermite_all_agrees() {
        let v = hermite_all(6, 1.7);
        for (r, h) in v.iter().enumerate() {
            assert_relative_eq!(*h, hermite_eval(r as u32, 1.7), max_relative = 1e-14);
        }
        assert_eq!(hermite_all(0, 2.0), vec![1.0]);
    }

    #[test]
    fn small_expansions() {
        let e1 = power_to_hermite(1).unwrap();
        assert_eq!(e1.coeffs, vec![0.0, 1.0]);
        let e2 = power_to_hermite(2).unwrap();
        assert_eq!(e2.coeffs, vec![1.0, 0.0, 1.0]);
        let e3 = power_to_hermite(3).unwrap();
        assert_eq!(e3.coeffs, vec![0.0, 3.0, 0.0, 1.0]);
        assert_eq!(e3.rank_above_constant(), Some(1));
        let e4 = power_to_hermite(4).unwrap();
        assert_eq!(e4.coeffs, vec![3.0, 0.0, 6.0, 0.0, 1.0]);
        assert_eq!(e4.rank_above_constant(), Some(2));
        assert!(power_to_hermite(61).is_err());
    }

    #[test]
    fn expansion_reconstructs_monomials() {
        for p in 0..=12u32 {
            let e = power_to_hermite(p).unwrap();
            for i in -8..=8 {
                let x = i as f64 * 0.5;
                let xp = x.powi(p as i32);
                let err = (xp - e.eval(x)).abs() / xp.abs().max(1.0);
                assert!(err <= 1e-10, "p={p} x={x} err={err}");
            }
        }
    }

    #[test]
    fn parity_zeros() {
        for p in 0..=20 {
            let e = power_to_hermite(p).unwrap();
            for k in 0..=p {
                if (p + k) % 2 == 1 {
                    assert_eq!(e.coeff(k), 0.0);
                }
            }
        }
    }

    #[test]
    fn coefficient_equals_gaussian_projection() {
        // a_{p,k} = E[N^p H_k(N)] / k!
        for p in 0..=8u32 {
            let e = power_to_hermite(p).unwrap();
            for k in 0..=p {
                let proj = gaussian_expectation(|x| x.powi(p as i32) * hermite_eval(k, x)) / factorial(k);
                assert!((e.coeff(k) - proj).abs() < 1e-8, "p={p} k={k}");
            }
        }
    }

    #[test]
    fn corollary_odd_examples() {
        assert_eq!(corollary_coeff_odd(1, 1).unwrap(), 1.0);
        assert_eq!(corollary_coeff_odd(2, 1).unwrap(), 3.0);
        assert_eq!(corollary_coeff_odd(2, 2).unwrap(), 1.0);
        assert!(corollary_coeff_odd(2, 0).is_err());
        assert!(corollary_coeff_odd(2, 3).is_err());
        assert!(corollary_coeff_odd(0, 1).is_err());
    }

    #[test]
    fn corollary_even_examples() {
        assert_eq!(corollary_coeff_even(1, 0).unwrap(), 1.0);
        assert_eq!(corollary_coeff_even(2, 0).unwrap(), 3.0);
        assert_eq!(corollary_coeff_even(1, 1).unwrap(), 1.0);
        assert_eq!(corollary_coeff_even(2, 1).unwrap(), 6.0);
        assert_eq!(corollary_coeff_even(2, 2).unwrap(), 1.0);
        assert!(corollary_coeff_even(2, 3).is_err());
    }

    #[test]
    fn corollary_coefficients_match_expansion() {
        for r in 1..=6u32 {
            let odd = power_to_hermite(2 * r - 1).unwrap();
            let even = power_to_hermite(2 * r).unwrap();
            for k in 1..=r {
                let a = corollary_coeff_odd(r, k).unwrap();
                let b = odd.coeff(2 * k - 1);
                assert!((a - b).abs() <= 1e-12 * b.abs(), "odd r={r} k={k}");
            }
            for k in 0..=r {
                let a = corollary_coeff_even(r, k).unwrap();
                let b = even.coeff(2 * k);
                assert!((a - b).abs() <= 1e-12 * b.abs(), "even r={r} k={k}");
            }
        }
    }

    #[test]
    fn even_moments() {
        assert_eq!(gaussian_even_moment(1).unwrap(), 1.0);
        assert_eq!(gaussian_even_moment(2).unwrap(), 3.0);
        assert_eq!(gaussian_even_moment(3).unwrap(), 15.0);
        assert_eq!(gaussian_even_moment(4).unwrap(), 105.0);
        assert!(gaussian_even_moment(31).is_err());
        for r in 1..=6u32 {
            let q = gaussian_expectation(|x| x.powi(2 * r as i32));
            assert_relative_eq!(gaussian_even_moment(r).unwrap(), q, max_relative = 1e-9);
            assert_eq!(gaussian_even_moment(r).unwrap(), corollary_coeff_even(r, 0).unwrap());
        }
    }
}
