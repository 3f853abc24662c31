//! Oracles shared by the integration tests. Each one is written
//! independently of the library routine it checks.

#![allow(dead_code)]

/// Probabilists' Hermite polynomial from the explicit sum.
pub fn hermite_explicit(n: u32, x: f64) -> f64 {
    let fact = |k: u32| (1..=k).fold(1.0f64, |a, i| a * i as f64);
    (0..=n / 2)
        .map(|m| {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            sign * fact(n) / (fact(m) * fact(n - 2 * m) * 2f64.powi(m as i32)) * x.powi((n - 2 * m) as i32)
        })
        .sum()
}

/// Gauss-Hermite rule for the weight `exp(-x²/2)/sqrt(2π)`: `N` nodes,
/// exact for polynomials of degree `< 2N`.
///
/// Nodes are the roots of `He_N`, bracketed on a fine grid and refined by
/// bisection; weights are `N! / (N He_{N-1}(x_i))²`.
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: u32) -> Self {
        let he = |k: u32, x: f64| {
            let (mut a, mut b) = (1.0f64, x);
            if k == 0 {
                return a;
            }
            for j in 1..k {
                let c = x * b - j as f64 * a;
                a = b;
                b = c;
            }
            b
        };
        let lim = 2.0 * (n as f64).sqrt() + 2.0;
        let steps = 200_000;
        let dx = 2.0 * lim / steps as f64;
        let mut nodes = Vec::new();
        let mut x0 = -lim;
        let mut f0 = he(n, x0);
        for i in 1..=steps {
            let x1 = -lim + i as f64 * dx;
            let f1 = he(n, x1);
            if f0 == 0.0 {
                nodes.push(x0);
            } else if f0 * f1 < 0.0 {
                let (mut a, mut b, mut fa) = (x0, x1, f0);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    let fm = he(n, m);
                    if fm == 0.0 || (b - a) < 1e-15 {
                        a = m;
                        b = m;
                        break;
                    }
                    if fa * fm < 0.0 {
                        b = m;
                    } else {
                        a = m;
                        fa = fm;
                    }
                }
                nodes.push(0.5 * (a + b));
            }
            x0 = x1;
            f0 = f1;
        }
        assert_eq!(nodes.len(), n as usize, "root bracketing failed");
        let nf = (1..=n).fold(1.0f64, |a, i| a * i as f64);
        let weights = nodes.iter().map(|&x| nf / (n as f64 * he(n - 1, x)).powi(2)).collect();
        Self { nodes, weights }
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// `E|N|` by composite Simpson on `[0, 12]`.
pub fn mean_abs_normal() -> f64 {
    let n = 20_000;
    let h = 12.0 / n as f64;
    let f = |x: f64| 2.0 * x * (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = f(0.0) + f(12.0);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `ρ(k)` for fractional Gaussian noise, straight from the definition.
pub fn fgn_autocovariance(h: f64, k: u64) -> f64 {
    let k = k as f64;
    let e = 2.0 * h;
    0.5 * ((k + 1.0).powf(e) - 2.0 * k.powf(e) + (k - 1.0).abs().powf(e))
}

/// `(K+1)^{2H} - K^{2H}` without cancellation.
pub fn telescoped(h: f64, k: u64) -> f64 {
    let k = k as f64;
    k.powf(2.0 * h) * (2.0 * h * (1.0 / k).ln_1p()).exp_m1()
}

/// `V_n^{(r)}` summed naively over the walk's steps.
pub fn naive_hermite_variation(r: u32, n: u32, positions: &[i64], cell: impl Fn(i64) -> f64) -> f64 {
    let kappa = if r % 2 == 1 { 0.25 } else { 0.75 };
    let s: f64 = positions
        .windows(2)
        .map(|w| {
            let g = if w[1] > w[0] { cell(w[0]) } else { -cell(w[1]) };
            hermite_explicit(r, g)
        })
        .sum();
    2f64.powf(-(n as f64) * kappa) * s
}
