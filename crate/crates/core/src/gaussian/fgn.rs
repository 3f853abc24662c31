use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{rho, HurstParameter};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, SimRng};

/// Circulant eigenvalues below `-EIGENVALUE_TOLERANCE * max` are treated as
/// a failed embedding; anything above is clamped to zero.
pub const EIGENVALUE_TOLERANCE: f64 = 1e-10;

/// A stationary, unit-variance fGn sample `G_1..G_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct FgnPath {
    hurst: HurstParameter,
    values: Vec<f64>,
    seed: u64,
}

impl FgnPath {
    pub fn from_parts(hurst: HurstParameter, values: Vec<f64>, seed: u64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::arg("values", "fGn path must be non-empty"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::arg("values", format!("non-finite value at index {i}")));
        }
        Ok(Self { hurst, values, seed })
    }

    pub fn hurst(&self) -> HurstParameter {
        self.hurst
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Square-root eigenvalues of the circulant embedding of `rho` for a given
/// `(H, m)`, plus the FFT plan of the matching size.
struct CirculantEmbedding {
    sqrt_eig: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl CirculantEmbedding {
    /// `None` when the embedding has a materially negative eigenvalue.
    fn build(h: HurstParameter, m: usize, planner: &mut FftPlanner<f64>) -> Option<Self> {
        let size = 2 * m;
        let mut row: Vec<Complex<f64>> = (0..size)
            .map(|i| {
                let lag = if i <= m { i } else { size - i };
                Complex::new(rho(h, lag as i64), 0.0)
            })
            .collect();
        let fft = planner.plan_fft_forward(size);
        fft.process(&mut row);
        let max = row.iter().map(|c| c.re).fold(0.0f64, f64::max);
        let min = row.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
        if min < -EIGENVALUE_TOLERANCE * max.max(1.0) {
            return None;
        }
        let scale = 1.0 / size as f64;
        let sqrt_eig = row.iter().map(|c| (c.re.max(0.0) * scale).sqrt()).collect();
        Some(Self { sqrt_eig, fft })
    }

    fn sample(&self, m: usize, rng: &mut SimRng) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = self
            .sqrt_eig
            .iter()
            .map(|&s| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex::new(s * re, s * im)
            })
            .collect();
        self.fft.process(&mut buf);
        buf.truncate(m);
        buf.into_iter().map(|c| c.re).collect()
    }
}

/// Embeddings keyed by `(H bits, m)`; `None` marks a failed embedding.
type EmbeddingCache = HashMap<(u64, usize), Option<Arc<CirculantEmbedding>>>;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static EMBEDDINGS: RefCell<EmbeddingCache> = RefCell::new(HashMap::new());
}

const EMBEDDING_CACHE_LIMIT: usize = 32;

fn embedding_for(h: HurstParameter, m: usize) -> Option<Arc<CirculantEmbedding>> {
    let key = (h.value().to_bits(), m);
    if let Some(hit) = EMBEDDINGS.with(|c| c.borrow().get(&key).cloned()) {
        return hit;
    }
    let built = PLANNER.with(|p| CirculantEmbedding::build(h, m, &mut p.borrow_mut()).map(Arc::new));
    EMBEDDINGS.with(|c| {
        let mut cache = c.borrow_mut();
        if cache.len() >= EMBEDDING_CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, built.clone());
    });
    built
}

/// Dense Cholesky sampling of a stationary sequence; the fallback path.
fn sample_fgn_dense(h: HurstParameter, m: usize, rng: &mut SimRng) -> Vec<f64> {
    let mut l = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let mut s = rho(h, i as i64 - j as i64);
            for k in 0..j {
                s -= l[i * m + k] * l[j * m + k];
            }
            l[i * m + j] = if i == j {
                s.max(0.0).sqrt()
            } else if l[j * m + j] > 0.0 {
                s / l[j * m + j]
            } else {
                0.0
            };
        }
    }
    let z: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
    (0..m).map(|i| (0..=i).map(|k| l[i * m + k] * z[k]).sum()).collect()
}

/// Exact stationary fGn of length `m` by circulant embedding.
///
/// Falls back to a dense Cholesky factorisation (and logs a warning) if the
/// embedding ever produces a negative eigenvalue beyond tolerance.
pub fn sample_fgn(h: HurstParameter, m: usize, seed: u64) -> Result<FgnPath> {
    if m == 0 {
        return Err(Error::arg("m", "fGn length must be at least 1"));
    }
    let mut rng = rng_from_seed(seed);
    let values = match embedding_for(h, m) {
        Some(emb) => emb.sample(m, &mut rng),
        None => {
            log::warn!("circulant embedding for H={h}, m={m} is not nonnegative; using dense Cholesky");
            sample_fgn_dense(h, m, &mut rng)
        }
    };
    FgnPath::from_parts(h, values, seed)
}

/// fGn indexed by grid cells over `ℤ`: cell `j` holds the standardized
/// increment over `[j, j+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FgnWindow {
    first_cell: i64,
    path: FgnPath,
}

impl FgnWindow {
    pub fn new(first_cell: i64, path: FgnPath) -> Self {
        Self { first_cell, path }
    }

    pub fn first_cell(&self) -> i64 {
        self.first_cell
    }

    pub fn last_cell(&self) -> i64 {
        self.first_cell + self.path.len() as i64 - 1
    }

    pub fn path(&self) -> &FgnPath {
        &self.path
    }

    pub fn hurst(&self) -> HurstParameter {
        self.path.hurst
    }

    #[inline]
    pub fn cell(&self, j: i64) -> Option<f64> {
        let idx = j.checked_sub(self.first_cell)?;
        usize::try_from(idx).ok().and_then(|i| self.path.values.get(i).copied())
    }

    pub fn covers(&self, lo: i64, hi: i64) -> bool {
        lo >= self.first_cell && hi <= self.last_cell()
    }

    pub fn require(&self, lo: i64, hi: i64) -> Result<()> {
        if lo > hi || self.covers(lo, hi) {
            Ok(())
        } else {
            Err(Error::Coverage {
                need_lo: lo,
                need_hi: hi,
                have_lo: self.first_cell,
                have_hi: self.last_cell(),
            })
        }
    }
}

/// Sample a window of cells `-half..half` (i.e. `2 * half` values).
pub fn sample_fgn_window(h: HurstParameter, half: usize, seed: u64) -> Result<FgnWindow> {
    if half == 0 {
        return Err(Error::EmptyGrid);
    }
    let path = sample_fgn(h, 2 * half, seed)?;
    Ok(FgnWindow::new(-(half as i64), path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_seed;

    fn h(v: f64) -> HurstParameter {
        HurstParameter::new(v).unwrap()
    }

    #[test]
    fn rejects_empty() {
        assert!(sample_fgn(h(0.5), 0, 1).is_err());
        assert!(matches!(sample_fgn_window(h(0.5), 0, 1), Err(Error::EmptyGrid)));
    }

    #[test]
    fn reproducible() {
        let a = sample_fgn(h(0.7), 1000, 42).unwrap();
        let b = sample_fgn(h(0.7), 1000, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_fgn(h(0.7), 1000, 43).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn single_draw_is_standard_normal() {
        let n = 20_000;
        let draws: Vec<f64> = (0..n)
            .map(|i| sample_fgn(h(0.3), 1, derive_seed(5, &[i])).unwrap().values()[0])
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 0.05);
    }

    #[test]
    fn brownian_case_is_white() {
        // At H = 1/2 consecutive values are uncorrelated.
        let n = 1 << 16;
        let p = sample_fgn(h(0.5), n, 9).unwrap();
        let v = p.values();
        let lag1 = v.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (n - 1) as f64;
        assert!(lag1.abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn dense_fallback_matches_covariance() {
        let hp = h(0.8);
        let m = 6;
        let reps = 20_000;
        let mut acc = vec![0.0; m];
        for r in 0..reps {
            let mut rng = rng_from_seed(derive_seed(77, &[r]));
            let v = sample_fgn_dense(hp, m, &mut rng);
            for (a, vk) in acc.iter_mut().zip(&v) {
                *a += v[0] * vk;
            }
        }
        for (k, a) in acc.iter().enumerate() {
            let est = a / reps as f64;
            assert!((est - rho(hp, k as i64)).abs() < 0.04, "lag {k}: {est}");
        }
    }

    #[test]
    fn embedding_eigenvalues_nonnegative_across_h() {
        let mut planner = FftPlanner::new();
        for hv in [0.05, 0.3, 0.5, 0.7, 0.95] {
            for m in [1, 2, 7, 64, 1000] {
                assert!(CirculantEmbedding::build(h(hv), m, &mut planner).is_some());
            }
        }
    }

    #[test]
    fn window_indexing() {
        let w = sample_fgn_window(h(0.4), 3, 1).unwrap();
        assert_eq!(w.first_cell(), -3);
        assert_eq!(w.last_cell(), 2);
        assert_eq!(w.cell(-3), Some(w.path().values()[0]));
        assert_eq!(w.cell(3), None);
        assert_eq!(w.cell(-4), None);
        assert!(w.require(-3, 2).is_ok());
        assert!(matches!(w.require(-1, 3), Err(Error::Coverage { need_hi: 3, .. })));
    }
}
