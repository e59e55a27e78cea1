//! Asymptotic covariance of `(ξ¹_{2N}, ξ²_N)` and of the one-component
//! estimator `(Ĥ, â²)` via the delta method.

use std::f64::consts::LN_2;

use rayon::prelude::*;

use crate::covariance::{
    gamma_expansion, gamma_raw, Aggregation, HurstIndex, NifbmParams, NoiseModel,
};
use crate::error::{invalid, Error, Result};
use crate::estimation::{
    estimate_noise, shared_horizon_xi, ModelKind, NoiseEstimate, XiStatistics,
};
use crate::simulation::{ComponentSampler, IncrementSampler, SampleGrid};

/// Number of lags summed exactly on each side before the analytic tail.
const EXACT_LAGS: u64 = 20_000;

/// Covariance entries of the limit law of `√N (ξ¹_{2N} − η₁, ξ²_N − η₂)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticCov2 {
    pub s11: f64,
    pub s12: f64,
    pub s22: f64,
}

impl AsymptoticCov2 {
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.s11, self.s12], [self.s12, self.s22]]
    }

    pub fn det(&self) -> f64 {
        self.s11 * self.s22 - self.s12 * self.s12
    }
}

/// Partial derivatives of `(f₁, f₂) = (E ξ¹, E ξ²)` in `(H, a²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jacobian2 {
    pub d11: f64,
    pub d12: f64,
    pub d21: f64,
    pub d22: f64,
}

impl Jacobian2 {
    pub fn det(&self) -> f64 {
        self.d11 * self.d22 - self.d12 * self.d21
    }

    pub fn inverse(&self) -> [[f64; 2]; 2] {
        let d = self.det();
        [[self.d22 / d, -self.d12 / d], [-self.d21 / d, self.d11 / d]]
    }
}

fn check_h(hurst: HurstIndex) -> Result<f64> {
    let hv = hurst.value();
    if hv >= 0.75 {
        Err(Error::HTooLarge(hv))
    } else {
        Ok(hv)
    }
}

/// `Σ_{i∈ℤ} γ(H, i+α) γ(H, i+β)`.
pub fn gamma_square_series(hurst: HurstIndex, alpha: i64, beta: i64) -> Result<f64> {
    let hv = check_h(hurst)?;
    let k = (beta - alpha).unsigned_abs();
    Ok(lagged_square_sum(hv, k, EXACT_LAGS.max(4 * k)))
}

/// `Σ_i γ(i) γ(i+k)` with `|i| ≤ m` summed exactly and the rest from the
/// large-lag expansion of `γ`, summed with Euler–Maclaurin.
pub(crate) fn lagged_square_sum(hv: f64, k: u64, m: u64) -> f64 {
    let g: Vec<f64> = (0..=m + k).map(|n| gamma_raw(hv, n)).collect();
    let mut exact = 0.0;
    for i in -(m as i64)..=(m as i64) {
        let a = g[i.unsigned_abs() as usize];
        let b = g[(i + k as i64).unsigned_abs() as usize];
        exact += a * b;
    }
    exact + tail_sum(hv, k as f64, m)
}

/// `Σ_{n>m} γ(n) (γ(n+k) + γ(n−k))` from the power expansion
/// `γ(x) = Σ c_e x^e`.
fn tail_sum(hv: f64, k: f64, m: u64) -> f64 {
    let p = 2.0 * hv + 2.0;
    let denom = 4.0 * (2.0 * hv + 1.0) * (hv + 1.0);
    // Coefficients of x^{p−4}, x^{p−6}, ...: gamma_expansion evaluated at x = 1.
    let coefs: Vec<(f64, f64)> = gamma_expansion(hv, 1.0)
        .into_iter()
        .take(6)
        .enumerate()
        .map(|(i, c)| (p - 4.0 - 2.0 * i as f64, c / denom))
        .collect();
    if coefs.iter().all(|&(_, c)| c == 0.0) {
        return 0.0;
    }
    let start = (m + 1) as f64;
    let mut total = 0.0;
    for &(e1, c1) in &coefs {
        for &(e2, c2) in &coefs {
            // (x+k)^{e2} + (x−k)^{e2} = 2 Σ_{r even} C(e2, r) k^r x^{e2−r}
            let mut binom = 1.0;
            for r in 0..=8u32 {
                if r > 0 {
                    binom *= (e2 - f64::from(r) + 1.0) / f64::from(r);
                }
                if r % 2 == 1 {
                    continue;
                }
                let coef = 2.0 * c1 * c2 * binom * k.powi(r as i32);
                if coef != 0.0 {
                    total += coef * power_tail(-(e1 + e2 - f64::from(r)), start);
                }
            }
        }
    }
    total
}

/// `Σ_{n ≥ a} n^{−s}` for `s > 1` and large `a` (Euler–Maclaurin).
fn power_tail(s: f64, a: f64) -> f64 {
    let f = a.powf(-s);
    let mut sum = a * f / (s - 1.0) + 0.5 * f;
    // B2/2!, B4/4!, B6/6! times the rising factorials of s.
    let bern = [1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0];
    let mut rising = s;
    let mut pow = f / a;
    for (j, b) in bern.iter().enumerate() {
        sum += b * rising * pow;
        let j = j as f64;
        rising *= (s + 2.0 * j + 1.0) * (s + 2.0 * j + 2.0);
        pow /= a * a;
    }
    sum
}

/// Limit covariance of `√N (ξ¹_{2N}, ξ²_N)` for the unit-scale process,
/// with `Σ₁₂ = (h^{4H}/2) Σ γ(i)(3γ(i) + 4γ(i+1) + γ(i+2))`.
///
/// The factor ½ in `Σ₁₂` follows from `cov(ΔX_k, ΔX^{2h}_l)` being
/// `½(r(k−2l) + 2r(k−2l−1) + r(k−2l−2))`; see
/// [`sigma_tilde_one_as_displayed`] for the variant without it.
pub fn sigma_tilde_one(hurst: HurstIndex, h: f64) -> Result<AsymptoticCov2> {
    let hv = check_h(hurst)?;
    let (s0, s1, s2) = three_sums(hurst)?;
    let scale = h.powf(4.0 * hv);
    let s11 = scale * s0;
    Ok(AsymptoticCov2 {
        s11,
        s12: 0.5 * scale * (3.0 * s0 + 4.0 * s1 + s2),
        s22: 2f64.powf(4.0 * hv + 1.0) * s11,
    })
}

/// Variant of [`sigma_tilde_one`] with `Σ₁₂ = h^{4H} Σ γ(i)(3γ(i) + 4γ(i+1) + γ(i+2))`.
/// It is not positive semidefinite (e.g. at `H = ½`) and is kept only for
/// comparison.
pub fn sigma_tilde_one_as_displayed(hurst: HurstIndex, h: f64) -> Result<AsymptoticCov2> {
    let c = sigma_tilde_one(hurst, h)?;
    Ok(AsymptoticCov2 {
        s12: 2.0 * c.s12,
        ..c
    })
}

fn three_sums(hurst: HurstIndex) -> Result<(f64, f64, f64)> {
    Ok((
        gamma_square_series(hurst, 0, 0)?,
        gamma_square_series(hurst, 0, 1)?,
        gamma_square_series(hurst, 0, 2)?,
    ))
}

/// Exact `N·Cov` of `(ξ¹_{2N}, ξ²_N)` at finite `N` for the unit-scale
/// process, from the Gaussian fourth-moment identity
/// `cov(X², Y²) = 2 cov(X, Y)²`.
pub fn finite_xi_cov(hurst: HurstIndex, h: f64, n: usize) -> AsymptoticCov2 {
    let hv = hurst.value();
    let w = h.powf(2.0 * hv);
    let len = 2 * n + 3;
    let r: Vec<f64> = (0..len as u64).map(|k| w * gamma_raw(hv, k)).collect();
    let ri = |d: i64| r[d.unsigned_abs() as usize];
    let n2 = 2 * n as i64;
    let nn = n as i64;
    // Var(ξ¹_{2N}) and Var(ξ²_N) as lag sums.
    let mut v1 = 0.0;
    for d in -(n2 - 1)..n2 {
        v1 += (n2 - d.abs()) as f64 * ri(d).powi(2);
    }
    let v1 = 2.0 * v1 / (n2 * n2) as f64;
    let w2 = 4f64.powf(hv) * w;
    let mut v2 = 0.0;
    for d in -(nn - 1)..nn {
        v2 += (nn - d.abs()) as f64 * (w2 * gamma_raw(hv, d.unsigned_abs())).powi(2);
    }
    let v2 = 2.0 * v2 / (nn * nn) as f64;
    let mut c12 = 0.0;
    for k in 0..n2 {
        for l in 0..nn {
            let d = k - 2 * l;
            let c = 0.5 * (ri(d) + 2.0 * ri(d - 1) + ri(d - 2));
            c12 += c * c;
        }
    }
    let c12 = 2.0 * c12 / (n2 * nn) as f64;
    let nf = n as f64;
    AsymptoticCov2 {
        s11: nf * v1,
        s12: nf * c12,
        s22: nf * v2,
    }
}

/// Jacobian of `θ = (H, a²) ↦ (E ξ¹, E ξ²)`, where
/// `E ξ¹ = a² F(H)`, `F(H) = 2h^{2H}(2^{2H}−1)/((2H+1)(H+1))`, `E ξ² = 2^{2H} E ξ¹`.
pub fn jacobian_one(theta: &NifbmParams) -> Jacobian2 {
    let hv = theta.hurst.value();
    let h = theta.h;
    let a2 = theta.a2;
    let x = 2f64.powf(2.0 * hv);
    let hp = h.powf(2.0 * hv);
    let den = (2.0 * hv + 1.0) * (hv + 1.0);
    let f = 2.0 * hp * (x - 1.0) / den;
    let df =
        2.0 * hp * (2.0 * h.ln() * (x - 1.0) + 2.0 * LN_2 * x) / den - f * (4.0 * hv + 3.0) / den;
    Jacobian2 {
        d11: a2 * df,
        d12: f,
        d21: a2 * x * (2.0 * LN_2 * f + df),
        d22: x * f,
    }
}

/// Closed form of `det f′(θ)`.
pub fn jacobian_one_det(theta: &NifbmParams) -> f64 {
    let hv = theta.hurst.value();
    let x = 2f64.powf(2.0 * hv);
    let den = (2.0 * hv + 1.0) * (hv + 1.0);
    -theta.a2 * theta.h.powf(4.0 * hv) * 2f64.powf(2.0 * hv + 3.0) * LN_2 * (x - 1.0).powi(2)
        / (den * den)
}

/// Asymptotic covariance of `√N (Ĥ − H, â² − a²)`,
/// `(f′)⁻¹ a⁴Σ̃ (f′)⁻ᵀ`, with `N` the number of width-`2h` increments.
pub fn sigma0_one(theta: &NifbmParams) -> Result<[[f64; 2]; 2]> {
    let st = sigma_tilde_one(theta.hurst, theta.h)?;
    let a4 = theta.a2 * theta.a2;
    let s = st.matrix().map(|row| row.map(|v| a4 * v));
    let inv = jacobian_one(theta).inverse();
    let mut tmp = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            tmp[i][j] = (0..2).map(|k| inv[i][k] * s[k][j]).sum();
        }
    }
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = (0..2).map(|k| tmp[i][k] * inv[j][k]).sum();
        }
    }
    let sym = 0.5 * (out[0][1] + out[1][0]);
    out[0][1] = sym;
    out[1][0] = sym;
    Ok(out)
}

/// How replications generate the series at each aggregation level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimulationMode {
    /// One width-`h` path, aggregated to every level on a shared horizon.
    Aggregate,
    /// Each level sampled at its own width from shared per-component normals.
    DirectPerJ,
}

/// Settings for [`empirical_estimator_cov`].
#[derive(Clone, Copy, Debug)]
pub struct EmpiricalCovConfig {
    pub model: NoiseModel,
    pub h: f64,
    /// Increments at the coarsest level; the normalization is `√n`.
    pub n: usize,
    pub mode: SimulationMode,
    pub seed: u64,
}

/// Sample covariance of `√n (θ̂ − θ)` across replications.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalCov {
    pub matrix: Vec<Vec<f64>>,
    pub used: usize,
    pub excluded: usize,
}

/// Parameter vector `(H, a²)` or `(H₁, H₂, a², b²)`.
pub fn theta_vector(model: &NoiseModel) -> Vec<f64> {
    match model {
        NoiseModel::One { hurst, a2 } => vec![hurst.value(), *a2],
        NoiseModel::Two(p) => vec![p.h1.value(), p.h2.value(), p.a2, p.b2],
    }
}

fn estimate_vector(e: &NoiseEstimate) -> Vec<f64> {
    match e {
        NoiseEstimate::One(e) => vec![e.h_hat, e.a2_hat],
        NoiseEstimate::Two(e) => vec![e.h1_hat, e.h2_hat, e.a2_hat, e.b2_hat],
    }
}

fn kind_of(model: &NoiseModel) -> ModelKind {
    match model {
        NoiseModel::One { .. } => ModelKind::OneNifbm,
        NoiseModel::Two(_) => ModelKind::TwoNifbm,
    }
}

/// Noise estimates for `replications` seeded streams.
pub fn simulate_noise_estimates(
    config: &EmpiricalCovConfig,
    replications: usize,
) -> Result<Vec<NoiseEstimate>> {
    let kind = kind_of(&config.model);
    let levels = kind.levels();
    let jmax = levels.iter().map(|j| j.factor()).max().unwrap_or(1) as usize;
    let reps = 0..replications as u64;
    let xis: Vec<XiStatistics> = match config.mode {
        SimulationMode::Aggregate => {
            let grid = SampleGrid::new(config.h, jmax * config.n + jmax - 1, Aggregation::ONE)?;
            let sampler = IncrementSampler::new(&config.model, grid)?;
            sampler
                .sample_streams(config.seed, reps)
                .par_iter()
                .map(|s| shared_horizon_xi(s, levels))
                .collect::<Result<_>>()?
        }
        SimulationMode::DirectPerJ => {
            let sampler = ComponentSampler::new(&config.model, config.h, config.n)?;
            sampler
                .sample_streams(config.seed, reps, levels)
                .iter()
                .map(|series| {
                    let mut xi = XiStatistics::new();
                    for s in series {
                        let v = s.values.iter().map(|v| v * v).sum::<f64>() / s.len() as f64;
                        xi.insert(s.grid.j, v, s.len());
                    }
                    xi
                })
                .collect()
        }
    };
    xis.iter()
        .map(|xi| estimate_noise(xi, config.h, kind))
        .collect()
}

/// Empirical covariance of the scaled estimation error; degenerate
/// replications are excluded and counted.
pub fn empirical_estimator_cov(
    config: &EmpiricalCovConfig,
    replications: usize,
) -> Result<EmpiricalCov> {
    if replications < 2 {
        return Err(invalid("replications", "need at least 2"));
    }
    let theta = theta_vector(&config.model);
    let estimates = simulate_noise_estimates(config, replications)?;
    let scale = (config.n as f64).sqrt();
    let errs: Vec<Vec<f64>> = estimates
        .iter()
        .filter(|e| !e.degenerate())
        .map(|e| {
            estimate_vector(e)
                .iter()
                .zip(&theta)
                .map(|(a, b)| scale * (a - b))
                .collect()
        })
        .collect();
    let used = errs.len();
    let excluded = replications - used;
    if used < 2 {
        return Err(invalid(
            "replications",
            "fewer than 2 non-degenerate replications",
        ));
    }
    let d = theta.len();
    let mean: Vec<f64> = (0..d)
        .map(|i| errs.iter().map(|e| e[i]).sum::<f64>() / used as f64)
        .collect();
    let mut matrix = vec![vec![0.0; d]; d];
    for (i, row) in matrix.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = errs
                .iter()
                .map(|e| (e[i] - mean[i]) * (e[j] - mean[j]))
                .sum::<f64>()
                / (used - 1) as f64;
        }
    }
    Ok(EmpiricalCov {
        matrix,
        used,
        excluded,
    })
}
