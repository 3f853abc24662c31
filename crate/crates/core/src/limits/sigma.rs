use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{rho, HurstParameter};
use crate::hermite::factorial;
use crate::numeric::CompensatedSum;

/// Starting truncation for [`sigma`]; doubled until the tail is certified.
const INITIAL_TRUNCATION: u64 = 64;

/// Largest truncation [`sigma`] will try.
pub const MAX_TRUNCATION: u64 = 1 << 26;

/// `σ_r² = r! Σ_{a∈ℤ} ρ(a)^r` with a certified bound on the discarded tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaConstant {
    pub order: u32,
    pub hurst: f64,
    /// `σ_r²`, clamped at zero.
    pub sigma2: f64,
    /// Terms `|a| <= truncation` are summed exactly.
    pub truncation: u64,
    /// `|σ_r² - true value| <= tail_bound`.
    pub tail_bound: f64,
}

impl SigmaConstant {
    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }
}

/// The series converges iff `r (2 - 2H) > 1`, i.e. `H < 1 - 1/(2r)`.
pub fn sigma_converges(order: u32, h: HurstParameter) -> bool {
    h.is_brownian() || h.value() < 1.0 - 1.0 / (2.0 * order as f64)
}

/// `Σ_{m >= M} m^{-β}` by Euler-Maclaurin, with a bound on the remainder.
fn power_tail(m: f64, beta: f64) -> (f64, f64) {
    let f = m.powf(-beta);
    let value = m * f / (beta - 1.0) + 0.5 * f + beta * f / (12.0 * m)
        - beta * (beta + 1.0) * (beta + 2.0) * f / (720.0 * m.powi(3));
    let next = beta * (beta + 1.0) * (beta + 2.0) * (beta + 3.0) * (beta + 4.0) * f / (30240.0 * m.powi(5));
    (value, 2.0 * next)
}

/// `σ_r²` from the terms `|a| <= k` plus a bracketed tail.
///
/// For `a >= 2`, `ρ(a) = H(2H-1) ξ^{2H-2}` for some `ξ ∈ (a-1, a+1)`, so
/// `|ρ(a)|^r` lies between `C^r (a+1)^{-β}` and `C^r (a-1)^{-β}` with
/// `C = H|2H-1|`, `β = r(2-2H)`. The tail estimate is the midpoint of the
/// resulting bracket; `tail_bound` is its half-width plus the quadrature
/// remainder.
pub fn sigma_truncated(order: u32, h: HurstParameter, k: u64) -> Result<SigmaConstant> {
    if order == 0 {
        return Err(Error::arg("r", "order must be positive"));
    }
    if k < 2 {
        return Err(Error::arg("K", "truncation must be at least 2"));
    }
    if !sigma_converges(order, h) {
        return Err(Error::Divergent {
            order,
            hurst: h.value(),
        });
    }
    let mut sum = CompensatedSum::new();
    sum.add(1.0);
    for a in 1..=k {
        sum.add(2.0 * rho(h, a as i64).powi(order as i32));
    }
    let (tail, bound) = tail_bracket(order, h, k);
    let rf = factorial(order);
    Ok(SigmaConstant {
        order,
        hurst: h.value(),
        sigma2: (rf * (sum.value() + tail)).max(0.0),
        truncation: k,
        tail_bound: rf * bound,
    })
}

/// Midpoint and half-width of `2 Σ_{a > k} ρ(a)^r`.
fn tail_bracket(order: u32, h: HurstParameter, k: u64) -> (f64, f64) {
    let c = h.value() * (2.0 * h.value() - 1.0).abs();
    if c == 0.0 {
        return (0.0, 0.0);
    }
    let beta = order as f64 * (2.0 - h.twice());
    let kf = k as f64;
    // lower: Σ_{m >= k+2} m^{-β}; upper adds the two terms k and k+1
    let (lower, em_err) = power_tail(kf + 2.0, beta);
    let gap = kf.powf(-beta) + (kf + 1.0).powf(-beta);
    let cr = c.powi(order as i32);
    let sign = if h.value() < 0.5 && order % 2 == 1 { -1.0 } else { 1.0 };
    let mid = 2.0 * sign * cr * (lower + 0.5 * gap);
    let half = 2.0 * cr * (0.5 * gap + em_err);
    (mid, half)
}

/// `σ_r²` with truncation doubled until `tail_bound <= tol`.
pub fn sigma(order: u32, h: HurstParameter, tol: f64) -> Result<SigmaConstant> {
    if !(tol > 0.0) {
        return Err(Error::arg("tol", format!("must be positive, got {tol}")));
    }
    if order == 0 {
        return Err(Error::arg("r", "order must be positive"));
    }
    if !sigma_converges(order, h) {
        return Err(Error::Divergent {
            order,
            hurst: h.value(),
        });
    }
    let rf = factorial(order);
    let mut k = INITIAL_TRUNCATION;
    loop {
        let (_, half) = tail_bracket(order, h, k);
        if rf * half <= tol {
            return sigma_truncated(order, h, k);
        }
        if k >= MAX_TRUNCATION {
            return Err(Error::ToleranceUnreachable {
                cap: MAX_TRUNCATION,
                bound: rf * half,
                tol,
            });
        }
        k *= 2;
    }
}
