//! Hermite and power variations of `Z = X ∘ Y` along the stopping-time
//! skeleton, plus the raw variations on the deterministic dyadic clock.
//!
//! Along the skeleton, the increment of `Z` over a step `j → j±1` is an
//! increment of `X` over one grid cell. After the `2^{nH/2}` scaling it is
//! a unit-lag fGn value, so a [`FgnWindow`] indexed by cell stands in for
//! `X` exactly in law. An up-step from `j` reads cell `j`; a down-step from
//! `j` reads cell `j-1` with the sign flipped.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::gaussian::{fbm_at_points, FgnWindow, HurstParameter, PointSet};
use crate::hermite::{corollary_coeff_even, corollary_coeff_odd, gaussian_even_moment, hermite_all, hermite_eval};
use crate::numeric::CompensatedSum;
use crate::rng::{derive_seed, stream, substream};
use crate::walk::{count_crossings, CrossingCounts, DyadicLevel, DyadicWalk};

/// A normalised statistic `2^{-n κ} Σ ...` together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationStatistic {
    pub hurst: f64,
    pub n: u32,
    pub order: u32,
    pub horizon: f64,
    pub kappa: f64,
    pub value: f64,
}

/// `κ̃ = 1/4` for odd Hermite order, `3/4` for even.
pub fn theorem_kappa(order: u32) -> f64 {
    if order % 2 == 1 {
        0.25
    } else {
        0.75
    }
}

/// `(1 - (4r-2)H) / 4`, the exponent for the signed `(2r-1)`-power sum.
pub fn corollary_kappa_odd(r: u32, h: HurstParameter) -> f64 {
    (1.0 - (4.0 * r as f64 - 2.0) * h.value()) / 4.0
}

/// `(3/4)(1 - 4rH/3)`, the exponent for the centred `2r`-power sum.
pub fn corollary_kappa_even(r: u32, h: HurstParameter) -> f64 {
    0.75 * (1.0 - 4.0 * r as f64 * h.value() / 3.0)
}

/// `2^{-n κ}`.
pub fn prefactor(n: u32, kappa: f64) -> f64 {
    (-(n as f64) * kappa).exp2()
}

fn check_order(order: u32) -> Result<()> {
    if order == 0 {
        Err(Error::arg("r", "order must be positive"))
    } else {
        Ok(())
    }
}

/// Cells crossed during the first `k` steps.
fn needed_cells(walk: &DyadicWalk, k: usize) -> (i64, i64) {
    let (lo, hi) = walk.range(k);
    (lo, hi - 1)
}

/// Signed standardized increments `2^{nH/2} (Z_{T_{k+1}} - Z_{T_k})` for the
/// first `k` steps, in step order.
fn step_increments<'a>(walk: &'a DyadicWalk, k: usize, fgn: &'a FgnWindow) -> impl Iterator<Item = f64> + 'a {
    walk.positions()[..=k].windows(2).map(move |w| {
        if w[1] > w[0] {
            fgn.cell(w[0]).expect("coverage checked")
        } else {
            -fgn.cell(w[1]).expect("coverage checked")
        }
    })
}

fn prepare(walk: &DyadicWalk, t: f64, fgn: &FgnWindow) -> Result<usize> {
    let k = walk.level().steps_for(t)?;
    if k > walk.len() {
        return Err(Error::HorizonTooLong {
            requested: k,
            available: walk.len(),
        });
    }
    let (lo, hi) = needed_cells(walk, k);
    fgn.require(lo, hi)?;
    Ok(k)
}

/// Half-width `J` of an fGn window (cells `-J..J`) for a walk whose
/// positions span `lo..=hi`: a power of two at least twice the largest
/// excursion, so the window never needs resampling.
pub fn window_half_width(lo: i64, hi: i64) -> usize {
    let reach = lo.unsigned_abs().max(hi.unsigned_abs()).max(1) as usize;
    (2 * reach).next_power_of_two()
}

/// `V_n^{(r)}(t) = 2^{-n κ̃} Σ_{k < ⌊2^n t⌋} H_r(2^{nH/2}(Z_{T_{k+1,n}} - Z_{T_{k,n}}))`,
/// summed step by step.
pub fn hermite_variation_direct(order: u32, t: f64, fgn: &FgnWindow, walk: &DyadicWalk) -> Result<VariationStatistic> {
    check_order(order)?;
    let k = prepare(walk, t, fgn)?;
    let sum: CompensatedSum = step_increments(walk, k, fgn).map(|g| hermite_eval(order, g)).collect();
    let kappa = theorem_kappa(order);
    let n = walk.level().n();
    Ok(VariationStatistic {
        hurst: fgn.hurst().value(),
        n,
        order,
        horizon: t,
        kappa,
        value: prefactor(n, kappa) * sum.value(),
    })
}

fn check_counts(counts: &CrossingCounts, t: f64, fgn: &FgnWindow) -> Result<()> {
    let k = counts.level().steps_for(t)?;
    if k != counts.horizon() {
        return Err(Error::arg(
            "counts",
            format!("tallies cover {} steps but t needs {k}", counts.horizon()),
        ));
    }
    if let Some((lo, hi)) = counts.support() {
        fgn.require(lo, hi)?;
    }
    Ok(())
}

/// Several orders of the separated form
/// `2^{-n κ̃} Σ_j H_r(G_j) (U_j + (-1)^r D_j)`, sharing one pass over the
/// cells.
pub fn hermite_variations_separated(
    orders: &[u32],
    t: f64,
    fgn: &FgnWindow,
    counts: &CrossingCounts,
) -> Result<Vec<VariationStatistic>> {
    for &r in orders {
        check_order(r)?;
    }
    check_counts(counts, t, fgn)?;
    let max = orders.iter().copied().max().unwrap_or(0);
    let mut sums = vec![CompensatedSum::new(); orders.len()];
    for (j, u, d) in counts.iter() {
        if u == 0 && d == 0 {
            continue;
        }
        let h = hermite_all(max, fgn.cell(j).expect("coverage checked"));
        for (sum, &r) in sums.iter_mut().zip(orders) {
            let weight = if r % 2 == 0 {
                u as f64 + d as f64
            } else {
                u as f64 - d as f64
            };
            if weight != 0.0 {
                sum.add(h[r as usize] * weight);
            }
        }
    }
    let n = counts.level().n();
    Ok(orders
        .iter()
        .zip(sums)
        .map(|(&order, sum)| {
            let kappa = theorem_kappa(order);
            VariationStatistic {
                hurst: fgn.hurst().value(),
                n,
                order,
                horizon: t,
                kappa,
                value: prefactor(n, kappa) * sum.value(),
            }
        })
        .collect())
}

/// The separated (crossing-count) form of `V_n^{(r)}(t)`.
pub fn hermite_variation_separated(
    order: u32,
    t: f64,
    fgn: &FgnWindow,
    counts: &CrossingCounts,
) -> Result<VariationStatistic> {
    Ok(hermite_variations_separated(&[order], t, fgn, counts)?[0])
}

/// `2^{-n(1-(4r-2)H)/4} Σ_k (Z_{T_{k+1,n}} - Z_{T_{k,n}})^{2r-1}`.
pub fn corollary_power_variation_odd(r: u32, t: f64, fgn: &FgnWindow, walk: &DyadicWalk) -> Result<VariationStatistic> {
    check_order(r)?;
    let k = prepare(walk, t, fgn)?;
    let h = fgn.hurst();
    let n = walk.level().n();
    let scale = (-(n as f64) * h.value() / 2.0).exp2();
    let p = (2 * r - 1) as i32;
    let sum: CompensatedSum = step_increments(walk, k, fgn).map(|g| (scale * g).powi(p)).collect();
    let kappa = corollary_kappa_odd(r, h);
    Ok(VariationStatistic {
        hurst: h.value(),
        n,
        order: 2 * r - 1,
        horizon: t,
        kappa,
        value: prefactor(n, kappa) * sum.value(),
    })
}

/// `2^{-(3n/4)(1-4rH/3)} Σ_k ((Z_{T_{k+1,n}} - Z_{T_{k,n}})^{2r} - 2^{-nrH} b_{r,0})`.
pub fn corollary_power_variation_even(
    r: u32,
    t: f64,
    fgn: &FgnWindow,
    walk: &DyadicWalk,
) -> Result<VariationStatistic> {
    check_order(r)?;
    let k = prepare(walk, t, fgn)?;
    let h = fgn.hurst();
    let n = walk.level().n();
    let scale = (-(n as f64) * h.value() / 2.0).exp2();
    let p = (2 * r) as i32;
    let centre = (-(n as f64) * r as f64 * h.value()).exp2() * corollary_coeff_even(r, 0)?;
    let sum: CompensatedSum = step_increments(walk, k, fgn)
        .map(|g| (scale * g).powi(p) - centre)
        .collect();
    let kappa = corollary_kappa_even(r, h);
    Ok(VariationStatistic {
        hurst: h.value(),
        n,
        order: 2 * r,
        horizon: t,
        kappa,
        value: prefactor(n, kappa) * sum.value(),
    })
}

/// `Σ_{k=1}^r a_{r,k} V^{(2k-1)}` given `hermite[i] = V^{(i+1)}`.
pub fn odd_decomposition(r: u32, hermite: &[f64]) -> Result<f64> {
    (1..=r)
        .map(|k| {
            let v = hermite
                .get((2 * k - 2) as usize)
                .ok_or_else(|| Error::arg("hermite", format!("missing order {}", 2 * k - 1)))?;
            Ok(corollary_coeff_odd(r, k)? * v)
        })
        .sum()
}

/// `Σ_{k=1}^r b_{r,k} V^{(2k)}` given `hermite[i] = V^{(i+1)}`.
pub fn even_decomposition(r: u32, hermite: &[f64]) -> Result<f64> {
    (1..=r)
        .map(|k| {
            let v = hermite
                .get((2 * k - 1) as usize)
                .ok_or_else(|| Error::arg("hermite", format!("missing order {}", 2 * k)))?;
            Ok(corollary_coeff_even(r, k)? * v)
        })
        .sum()
}

/// Convenience: counts plus separated statistic in one call.
pub fn hermite_variation_from_walk(
    order: u32,
    t: f64,
    fgn: &FgnWindow,
    walk: &DyadicWalk,
) -> Result<VariationStatistic> {
    let k = walk.level().steps_for(t)?;
    let counts = count_crossings(walk, k)?;
    hermite_variation_separated(order, t, fgn, &counts)
}

/// Raw and normalised power variations of `Z` on the clock `k 2^{-n}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicTimeVariation {
    /// `R_n^{(p)}(t) = Σ (Z_{(k+1)2^{-n}} - Z_{k 2^{-n}})^p`.
    pub raw: f64,
    /// `S_n^{(p)}(t) = 2^{-nκ} Σ (ΔZ^p - E[ΔZ^p])`.
    pub normalized: f64,
    /// `E[ΔZ^p]`.
    pub increment_moment: f64,
    pub kappa: f64,
}

/// `E|N|^q = 2^{q/2} Γ((q+1)/2) / sqrt(π)`.
fn normal_abs_moment(q: f64) -> f64 {
    q.mul_add(0.5, 0.0).exp2() * gamma(0.5 * (q + 1.0)) / std::f64::consts::PI.sqrt()
}

/// `E[(Z_{(k+1)2^{-n}} - Z_{k2^{-n}})^p]`.
///
/// Conditionally on `Y` the increment is `N(0, |ΔY|^{2H})` and
/// `|ΔY| = 2^{-n/2}|N'|`, so the moment is
/// `2^{-npH/2} E|N'|^{pH} E[N^p]`.
pub fn dyadic_increment_moment(p: u32, n: u32, h: HurstParameter) -> Result<f64> {
    if p % 2 == 1 {
        return Ok(0.0);
    }
    let ph = p as f64 * h.value();
    Ok((-(n as f64) * ph / 2.0).exp2() * normal_abs_moment(ph) * gaussian_even_moment(p / 2)?)
}

/// Exponent `κ` for `S_n^{(p)}`: `(1 - 2pH)/4` for odd `p`, `(3 - 2pH)/4`
/// for even `p`.
pub fn dyadic_kappa(p: u32, h: HurstParameter) -> f64 {
    if p % 2 == 1 {
        corollary_kappa_odd(p.div_ceil(2), h)
    } else {
        corollary_kappa_even(p / 2, h)
    }
}

/// Simulate `Z` at `k 2^{-n}`, `k <= ⌊2^n t⌋`, and return `R` and `S`.
pub fn dyadic_time_variation(p: u32, n: u32, t: f64, h: HurstParameter, seed: u64) -> Result<DyadicTimeVariation> {
    if p == 0 {
        return Err(Error::arg("p", "power must be positive"));
    }
    let k = DyadicLevel::new(n).steps_for(t)?;
    let mut rng = substream(seed, &[stream::BROWNIAN]);
    let sd = (-(n as f64) / 2.0).exp2();
    let mut y = Vec::with_capacity(k + 1);
    let mut acc = 0.0;
    y.push(acc);
    for _ in 0..k {
        let z: f64 = rng.sample(StandardNormal);
        acc += sd * z;
        y.push(acc);
    }
    let pts = PointSet::from_unsorted(y.clone())?;
    let x = fbm_at_points(h, &pts, derive_seed(seed, &[stream::FBM_POINTS]))?;
    let z: Vec<f64> = y.iter().map(|&v| x[pts.position(v).expect("point present")]).collect();
    let moment = dyadic_increment_moment(p, n, h)?;
    let mut raw = CompensatedSum::new();
    let mut centred = CompensatedSum::new();
    for w in z.windows(2) {
        let d = (w[1] - w[0]).powi(p as i32);
        raw.add(d);
        centred.add(d - moment);
    }
    let kappa = dyadic_kappa(p, h);
    Ok(DyadicTimeVariation {
        raw: raw.value(),
        normalized: prefactor(n, kappa) * centred.value(),
        increment_moment: moment,
        kappa,
    })
}
