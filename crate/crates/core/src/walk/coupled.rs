//! Coupled mode: read the skeleton walk off a fine Brownian path, so that
//! crossing-count local time and occupation local time describe the same
//! realisation of `Y`.

use super::brownian::occupation_on_prefix;
use super::{count_crossings, walk_local_time, BrownianPath, DyadicLevel, DyadicWalk};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{stream, substream};

/// Bridge touches with probability below `exp(-40)` are not drawn.
const NEGLIGIBLE_EXPONENT: f64 = 40.0;

#[derive(Debug, Clone)]
pub struct CoupledSkeleton {
    pub walk: DyadicWalk,
    /// Physical time of each step, at mesh resolution.
    pub times: Vec<f64>,
}

/// First `max_steps` successive grid hits of `path`.
///
/// A mesh step that jumps over several levels records each of them in
/// order, as the interpolated path would. A step whose endpoints both stay
/// short of the next level may still touch it in between: the Brownian
/// bridge from `w0` to `w1` over time `h` reaches `a` with probability
/// `exp(-2 (a - w0)(a - w1) / h)`, and such touches are drawn from a
/// substream of the path seed. Without this the walk misses touches at
/// rate `O(sqrt(h) / spacing)` and runs slow.
pub fn skeleton_from_path(path: &BrownianPath, level: DyadicLevel, max_steps: usize) -> Result<CoupledSkeleton> {
    let spacing = level.spacing();
    let inv = 1.0 / spacing;
    let h = path.mesh();
    let mut rng = substream(path.seed(), &[stream::BRIDGE, u64::from(level.n())]);
    let mut pos = 0i64;
    let mut steps = Vec::with_capacity(max_steps + 1);
    let mut times = Vec::with_capacity(max_steps + 1);
    steps.push(0);
    times.push(0.0);
    let values = path.values();
    'outer: for k in 1..values.len() {
        let (w0, w1) = (values[k - 1], values[k]);
        let time = k as f64 * h;
        let x = w1 * inv;
        let before = steps.len();
        loop {
            while x >= (pos + 1) as f64 {
                pos += 1;
                steps.push(pos);
                times.push(time);
                if steps.len() > max_steps {
                    break 'outer;
                }
            }
            while x <= (pos - 1) as f64 {
                pos -= 1;
                steps.push(pos);
                times.push(time);
                if steps.len() > max_steps {
                    break 'outer;
                }
            }
            if steps.len() > before {
                break;
            }
            let up = (pos + 1) as f64 * spacing;
            let down = (pos - 1) as f64 * spacing;
            let e_up = 2.0 * (up - w0) * (up - w1) / h;
            let e_down = 2.0 * (w0 - down) * (w1 - down) / h;
            if e_up.min(e_down) > NEGLIGIBLE_EXPONENT {
                break;
            }
            let p_up = (-e_up).exp();
            let p_down = (-e_down).exp();
            let u: f64 = rng.random();
            let touched = if u < p_up {
                pos + 1
            } else if u < p_up + p_down {
                pos - 1
            } else {
                break;
            };
            pos = touched;
            steps.push(pos);
            times.push(time);
            if steps.len() > max_steps {
                break 'outer;
            }
        }
    }
    if steps.len() <= max_steps {
        return Err(Error::HorizonTooLong {
            requested: max_steps,
            available: steps.len() - 1,
        });
    }
    Ok(CoupledSkeleton {
        walk: DyadicWalk::from_positions(level, steps, path.seed())?,
        times,
    })
}

/// `max_j |𝓛_{j,n}(t) - L̂_t(j 2^{-n/2})|` for one coupled realisation.
///
/// The crossing side uses the first `⌊2^n t⌋` skeleton steps of `path`;
/// the occupation side uses `path` on `[0, t]`. `path` must run long
/// enough past `t` to contain those steps.
pub fn crossing_vs_occupation_discrepancy(path: &BrownianPath, n: u32, t: f64, bandwidth: f64) -> Result<f64> {
    let level = DyadicLevel::new(n);
    let k = level.steps_for(t)?;
    let skeleton = skeleton_from_path(path, level, k)?;
    let counts = count_crossings(&skeleton.walk, k)?;
    let crossing = walk_local_time(&counts);
    if crossing.x_grid.is_empty() {
        return Ok(0.0);
    }
    let occupation = occupation_on_prefix(path, path.prefix_steps(t), &crossing.x_grid, bandwidth)?;
    Ok(crossing
        .values
        .iter()
        .zip(&occupation.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}
