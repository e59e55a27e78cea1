//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gauss–Legendre rule on [-1, 1], nodes by Newton iteration on `P_n`.
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes.push(x);
            weights.push(2.0 / ((1.0 - x * x) * dp * dp));
        }
        Self { nodes, weights }
    }

    pub fn panel(&self, f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + r * x))
            .sum::<f64>()
            * r
    }

    /// Adaptive bisection until a panel and its two halves agree to `tol`.
    pub fn adaptive(&self, f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        let whole = self.panel(f, a, b);
        self.refine(f, a, b, whole, tol, 0)
    }

    fn refine(
        &self,
        f: &mut dyn FnMut(f64) -> f64,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let left = self.panel(f, a, m);
        let right = self.panel(f, m, b);
        if (left + right - whole).abs() <= tol || depth >= 60 {
            return left + right;
        }
        self.refine(f, a, m, left, tol, depth + 1) + self.refine(f, m, b, right, tol, depth + 1)
    }

    /// Adaptive integral split at every breakpoint strictly inside `(a, b)`.
    pub fn with_breaks(
        &self,
        f: &mut dyn FnMut(f64) -> f64,
        a: f64,
        b: f64,
        breaks: &[f64],
        tol: f64,
    ) -> f64 {
        let mut pts = vec![a];
        let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
        inner.sort_by(f64::total_cmp);
        pts.extend(inner);
        pts.push(b);
        pts.windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| self.adaptive(f, w[0], w[1], tol))
            .sum()
    }
}

/// fBm covariance written out directly.
pub fn fbm_cov_direct(hv: f64, u: f64, v: f64) -> f64 {
    let p = 2.0 * hv;
    0.5 * (u.abs().powf(p) + v.abs().powf(p) - (u - v).abs().powf(p))
}

/// `(1/h²) ∫_t^{t+h} ∫_s^{s+h} E[W_u W_v] dv du` by nested adaptive quadrature.
pub fn nifbm_cov_quadrature(hv: f64, h: f64, t: f64, s: f64) -> f64 {
    let gl = GaussLegendre::new(15);
    let mut outer = |u: f64| {
        let mut inner = |v: f64| fbm_cov_direct(hv, u, v);
        gl.with_breaks(&mut inner, s, s + h, &[u], 1e-13)
    };
    gl.with_breaks(&mut outer, t, t + h, &[s, s + h], 1e-12) / (h * h)
}

/// Central difference of `f` at `x` with step `step`.
pub fn central_difference(f: &dyn Fn(f64) -> f64, x: f64, step: f64) -> f64 {
    (f(x + step) - f(x - step)) / (2.0 * step)
}

/// Solves `A x = b` for a dense row-major `A` by Gaussian elimination with
/// partial pivoting.
pub fn dense_solve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .unwrap();
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
            }
            x.swap(col, piv);
        }
        let d = m[col * n + col];
        for row in col + 1..n {
            let f = m[row * n + col] / d;
            if f != 0.0 {
                for k in col..n {
                    m[row * n + k] -= f * m[col * n + k];
                }
                x[row] -= f * x[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col];
        for k in col + 1..n {
            acc -= m[col * n + k] * x[k];
        }
        x[col] = acc / m[col * n + col];
    }
    x
}

/// Deterministic RNG for randomized oracle grids.
pub fn grid_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

/// Sample covariance of paired values and its Monte Carlo standard error.
pub fn cov_with_se(a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let c = prods.iter().sum::<f64>() / (n - 1.0);
    let mp = prods.iter().sum::<f64>() / n;
    let vp = prods.iter().map(|p| (p - mp).powi(2)).sum::<f64>() / (n - 1.0);
    (c, (vp / n).sqrt())
}
