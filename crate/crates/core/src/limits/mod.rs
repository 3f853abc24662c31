//! Limit constants and simulators for the limit processes: `σ_r`, `B ∘ Y`,
//! the Brownian-motion-in-random-scenery integral `∫ L_t^x(Y) dB_x`, and
//! the CDF of the odd-order limit law.

mod process;
mod sigma;

pub use process::{
    local_time_square_oracle, simulate_b_of_y, simulate_scenery_given_profile, simulate_scenery_integral,
    OracleEstimate, SceneryIntegral,
};
pub use sigma::{sigma, sigma_converges, sigma_truncated, SigmaConstant, MAX_TRUNCATION};

use crate::error::{Error, Result};
use crate::numeric::{adaptive_simpson, normal_cdf};

/// `E|Y_t| = sqrt(2t/π)`.
pub fn mean_abs_brownian(t: f64) -> f64 {
    (2.0 * t / std::f64::consts::PI).sqrt()
}

/// Quadrature accuracy of [`mixture_cdf_odd`].
pub const MIXTURE_TOLERANCE: f64 = 1e-8;

/// CDF of `σ B(Y_t)`, i.e. of `σ sqrt(|Y_t|) N` with `N` independent of `Y`:
/// `F(z) = ∫_0^∞ Φ(z / (σ sqrt(y))) (2/sqrt(2πt)) exp(-y²/(2t)) dy`.
///
/// Evaluated after `y = sqrt(t) v²`, which removes the square-root
/// singularity at the origin.
pub fn mixture_cdf_odd(z: f64, t: f64, sigma: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::arg("t", format!("must be positive, got {t}")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::arg("sigma", format!("must be positive, got {sigma}")));
    }
    if z.is_nan() {
        return Err(Error::arg("z", "NaN"));
    }
    if z == f64::INFINITY {
        return Ok(1.0);
    }
    if z == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if z == 0.0 {
        return Ok(0.5);
    }
    let c = z / (sigma * t.powf(0.25));
    let norm = 4.0 / (2.0 * std::f64::consts::PI).sqrt();
    let f = |v: f64| {
        if v == 0.0 {
            0.0
        } else {
            normal_cdf(c / v) * norm * v * (-0.5 * v.powi(4)).exp()
        }
    };
    // v^4 / 2 > 700 beyond v = 6.5
    let panels = 26;
    let width = 0.25;
    let tol = 0.1 * MIXTURE_TOLERANCE / panels as f64;
    let total: f64 = (0..panels)
        .map(|i| adaptive_simpson(&f, i as f64 * width, (i + 1) as f64 * width, tol))
        .sum();
    Ok(total.clamp(0.0, 1.0))
}
