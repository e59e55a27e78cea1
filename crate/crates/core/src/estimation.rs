//! Drift and noise-parameter estimators.
//!
//! Noise parameters are recovered from the mean squared increments `ξ^j`
//! at aggregation factors `j ∈ {1, 2, 4, 8}` by inverting their limits in
//! closed form; the drift coefficient is estimated either by generalized
//! least squares (the MLE) or from the two end points of the path.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::covariance::{
    nifbm_cov, nifbm_var, pow0, Aggregation, AutocovSequence, Component, MixedParams, NoiseModel,
};
use crate::error::{invalid, Error, Result};
use crate::linalg::CholeskyFactor;
use crate::simulation::{aggregate_increments, cholesky_factor, IncrementSeries, SampleGrid};

/// Which noise model an estimator targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    OneNifbm,
    TwoNifbm,
}

impl ModelKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "one-nifbm" => Ok(Self::OneNifbm),
            "two-nifbm" => Ok(Self::TwoNifbm),
            _ => Err(invalid("model", format!("unknown model `{s}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::OneNifbm => "one-nifbm",
            Self::TwoNifbm => "two-nifbm",
        }
    }

    /// Aggregation factors the estimator needs.
    pub fn levels(self) -> &'static [Aggregation] {
        match self {
            Self::OneNifbm => &[Aggregation::ONE, Aggregation::TWO],
            Self::TwoNifbm => &Aggregation::ALL,
        }
    }
}

/// `ξ^j` values and the number of increments each was computed from.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct XiStatistics {
    xi: [Option<f64>; 4],
    counts: [usize; 4],
}

impl XiStatistics {
    pub fn new() -> Self {
        Self::default()
    }

    /// Statistics from exact values `[ξ¹, ξ², ξ⁴, ξ⁸]`, e.g. their limits.
    pub fn from_values(values: [f64; 4]) -> Self {
        let mut s = Self::new();
        for (j, v) in Aggregation::ALL.into_iter().zip(values) {
            s.insert(j, v, 0);
        }
        s
    }

    pub fn insert(&mut self, j: Aggregation, xi: f64, count: usize) {
        self.xi[j.index()] = Some(xi);
        self.counts[j.index()] = count;
    }

    pub fn get(&self, j: Aggregation) -> Option<f64> {
        self.xi[j.index()]
    }

    pub fn count(&self, j: Aggregation) -> usize {
        self.counts[j.index()]
    }

    fn require(&self, j: Aggregation) -> Result<f64> {
        self.get(j)
            .ok_or_else(|| invalid("xi", format!("missing statistic for j = {}", j.factor())))
    }
}

/// Mean squared increment `(1/N) Σ ΔX_k²`.
pub fn xi_statistic(series: &IncrementSeries) -> Result<f64> {
    xi_of(&series.values)
}

fn xi_of(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    Ok(values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64)
}

/// `ξ^j` for each `j` in `levels` on a shared horizon of a width-`h` series:
/// with `J = max j`, `N` increments are formed at factor `J` and `J·N/j`
/// at factor `j` (e.g. `8N, 4N, 2N, N`).
pub fn shared_horizon_xi(base: &IncrementSeries, levels: &[Aggregation]) -> Result<XiStatistics> {
    if base.grid.j != Aggregation::ONE {
        return Err(invalid(
            "series",
            "shared-horizon statistics need a width-h series",
        ));
    }
    let jmax = levels.iter().map(|j| j.factor()).max().unwrap_or(1) as usize;
    let len = base.len();
    if len + 1 < 2 * jmax {
        return Err(Error::TooShort {
            needed: 2 * jmax - 1,
            got: len,
        });
    }
    let n = (len + 1) / jmax - 1;
    let mut out = XiStatistics::new();
    for &j in levels {
        let take = n * jmax / j.factor() as usize;
        let values = if j == Aggregation::ONE {
            base.values[..take].to_vec()
        } else {
            aggregate_increments(base, j)?.values[..take].to_vec()
        };
        out.insert(j, xi_of(&values)?, take);
    }
    Ok(out)
}

/// `2h^{2H}/((2H+1)(H+1))`, the factor relating `a²(2^{2H}−1)` to `E[ξ¹]`.
pub fn level_constant(hurst: f64, h: f64) -> f64 {
    2.0 * h.powf(2.0 * hurst) / ((2.0 * hurst + 1.0) * (hurst + 1.0))
}

/// Limit of `ξ^j` for the given components at base width `h`.
pub fn expected_xi(components: &[Component], h: f64, j: Aggregation) -> f64 {
    let jf = f64::from(j.factor());
    components
        .iter()
        .map(|c| {
            let hv = c.hurst.value();
            let x = 2f64.powf(2.0 * hv);
            c.scale2 * level_constant(hv, h) * (x - 1.0) * jf.powf(2.0 * hv)
        })
        .sum()
}

/// Limits `(η₁, η₂, η₄, η₈)` of the ξ statistics for mixed parameters.
pub fn forward_moment_map(theta: &MixedParams, h: f64) -> [f64; 4] {
    let comps = NoiseModel::Two(*theta).components();
    Aggregation::ALL.map(|j| expected_xi(&comps, h, j))
}

/// Limits of the ξ statistics for any noise model.
pub fn noise_moments(model: &NoiseModel, h: f64) -> [f64; 4] {
    let comps = model.components();
    Aggregation::ALL.map(|j| expected_xi(&comps, h, j))
}

/// `p / q`, or `0` when `q = 0`.
fn frac(p: f64, q: f64) -> f64 {
    if q == 0.0 {
        0.0
    } else {
        p / q
    }
}

fn log_plus(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        0.0
    }
}

fn sqrt_plus(x: f64) -> f64 {
    if x > 0.0 {
        x.sqrt()
    } else {
        0.0
    }
}

fn in_unit(h: f64) -> bool {
    h > 0.0 && h < 1.0
}

/// Estimate of `(H, a²)` for the one-component model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OneNifbmEstimate {
    pub h_hat: f64,
    pub a2_hat: f64,
    pub degenerate: bool,
}

/// Estimates `(H, a²)` from `ξ¹` (on `2N` increments) and `ξ²` (on `N`).
pub fn estimate_one_nifbm(xi1: f64, xi2: f64, h: f64) -> OneNifbmEstimate {
    let h_hat = log_plus(frac(xi2, xi1)) / (2.0 * LN_2);
    let a_hat = level_constant(h_hat, h);
    let a2_hat = frac(xi1, a_hat * (2f64.powf(2.0 * h_hat) - 1.0));
    let degenerate = !in_unit(h_hat) || !(a2_hat > 0.0) || !a2_hat.is_finite();
    OneNifbmEstimate {
        h_hat,
        a2_hat,
        degenerate,
    }
}

/// Estimate of `(H₁, H₂, a², b²)` with `H₁ ≥ H₂`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TwoNifbmEstimate {
    pub h1_hat: f64,
    pub h2_hat: f64,
    pub a2_hat: f64,
    pub b2_hat: f64,
    pub discriminant: f64,
    pub degenerate: bool,
}

/// Inverts the moment map: `2^{2H₁}` and `2^{2H₂}` are the roots of a
/// quadratic in the four ξ statistics, and the scales follow linearly.
pub fn estimate_two_nifbm(xi: &XiStatistics, h: f64) -> Result<TwoNifbmEstimate> {
    let x1 = xi.require(Aggregation::ONE)?;
    let x2 = xi.require(Aggregation::TWO)?;
    let x4 = xi.require(Aggregation::FOUR)?;
    let x8 = xi.require(Aggregation::EIGHT)?;

    let lead = x4 * x1 - x2 * x2;
    let mid = x8 * x1 - x4 * x2;
    let d = (x4 * x2 - x8 * x1).powi(2) - 4.0 * lead * (x8 * x2 - x4 * x4);
    let r1 = frac(mid + sqrt_plus(d), 2.0 * lead);
    let r2 = frac(mid - sqrt_plus(d), 2.0 * lead);
    let (x, y) = if r1 >= r2 { (r1, r2) } else { (r2, r1) };

    let h1_hat = log_plus(x) / (2.0 * LN_2);
    let h2_hat = log_plus(y) / (2.0 * LN_2);
    let a2_hat = frac(
        (2.0 * h1_hat + 1.0) * (h1_hat + 1.0) * (x2 - y * x1),
        2.0 * pow0(h, 2.0 * h1_hat) * (x - y) * (x - 1.0),
    );
    let b2_hat = frac(
        (2.0 * h2_hat + 1.0) * (h2_hat + 1.0) * (x2 - x * x1),
        2.0 * pow0(h, 2.0 * h2_hat) * (y - x) * (y - 1.0),
    );
    let degenerate = !(d > 0.0)
        || !in_unit(h1_hat)
        || !in_unit(h2_hat)
        || !(a2_hat > 0.0 && a2_hat.is_finite())
        || !(b2_hat > 0.0 && b2_hat.is_finite());
    Ok(TwoNifbmEstimate {
        h1_hat,
        h2_hat,
        a2_hat,
        b2_hat,
        discriminant: d,
        degenerate,
    })
}

/// Estimate of either noise model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum NoiseEstimate {
    One(OneNifbmEstimate),
    Two(TwoNifbmEstimate),
}

impl NoiseEstimate {
    pub fn degenerate(&self) -> bool {
        match self {
            NoiseEstimate::One(e) => e.degenerate,
            NoiseEstimate::Two(e) => e.degenerate,
        }
    }
}

/// Runs the estimator for `kind` on precomputed statistics.
pub fn estimate_noise(xi: &XiStatistics, h: f64, kind: ModelKind) -> Result<NoiseEstimate> {
    match kind {
        ModelKind::OneNifbm => {
            let x1 = xi.require(Aggregation::ONE)?;
            let x2 = xi.require(Aggregation::TWO)?;
            Ok(NoiseEstimate::One(estimate_one_nifbm(x1, x2, h)))
        }
        ModelKind::TwoNifbm => estimate_two_nifbm(xi, h).map(NoiseEstimate::Two),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftMethod {
    Mle,
    TwoPoint,
}

/// Drift estimate with its exact finite-sample variance when known.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DriftEstimate {
    pub mu_hat: f64,
    pub variance: Option<f64>,
    pub method: DriftMethod,
    pub degenerate: bool,
}

/// Generalized least squares for `μ` with a fixed drift design `ΔG`;
/// the whitened design is computed once and reused across replications.
#[derive(Clone, Debug)]
pub struct MleDrift {
    factor: CholeskyFactor,
    white_g: Vec<f64>,
    info: f64,
}

impl MleDrift {
    pub fn new(factor: CholeskyFactor, delta_g: &[f64]) -> Result<Self> {
        if delta_g.len() != factor.dim() {
            return Err(Error::LengthMismatch {
                expected: factor.dim(),
                found: delta_g.len(),
            });
        }
        let white_g = factor.solve_lower(delta_g);
        let info: f64 = white_g.iter().map(|v| v * v).sum();
        if info == 0.0 {
            return Err(Error::ZeroDenominator("drift MLE: ΔG vanishes"));
        }
        Ok(Self {
            factor,
            white_g,
            info,
        })
    }

    /// `1 / (ΔGᵀ Σ⁻¹ ΔG)`.
    pub fn variance(&self) -> f64 {
        1.0 / self.info
    }

    pub fn estimate(&self, delta_y: &[f64]) -> Result<DriftEstimate> {
        if delta_y.len() != self.factor.dim() {
            return Err(Error::LengthMismatch {
                expected: self.factor.dim(),
                found: delta_y.len(),
            });
        }
        let white_y = self.factor.solve_lower(delta_y);
        let cross: f64 = self.white_g.iter().zip(&white_y).map(|(a, b)| a * b).sum();
        Ok(DriftEstimate {
            mu_hat: cross / self.info,
            variance: Some(self.variance()),
            method: DriftMethod::Mle,
            degenerate: false,
        })
    }
}

/// Maximum likelihood estimate `(ΔGᵀΣ⁻¹ΔY)/(ΔGᵀΣ⁻¹ΔG)` of the drift, with
/// `Σ` the noise increment covariance.
pub fn drift_mle(
    delta_y: &IncrementSeries,
    delta_g: &[f64],
    cov: &AutocovSequence,
) -> Result<DriftEstimate> {
    if cov.len() != delta_y.len() {
        return Err(Error::LengthMismatch {
            expected: delta_y.len(),
            found: cov.len(),
        });
    }
    MleDrift::new(cholesky_factor(cov)?, delta_g)?.estimate(&delta_y.values)
}

/// `μ̃ = (Y_N − Y_0)/G_N`; its variance is `noise_diff_var / G_N²` when the
/// noise variance `Var(X_N − X_0)` is supplied.
pub fn drift_two_point(y0: f64, y_n: f64, g_n: f64, noise_diff_var: Option<f64>) -> DriftEstimate {
    DriftEstimate {
        mu_hat: frac(y_n - y0, g_n),
        variance: noise_diff_var.map(|v| frac(v, g_n * g_n)),
        method: DriftMethod::TwoPoint,
        degenerate: g_n == 0.0,
    }
}

/// `Var(X_{Nh} − X_0)` in closed form:
/// `Σ scale·h^{2H}[(N+1)^{2H+2} + (N−1)^{2H+2} − 2N^{2H+2} − 2]/((2H+1)(2H+2))`.
pub fn two_point_noise_variance(model: &NoiseModel, h: f64, n: usize) -> f64 {
    let nf = n as f64;
    model
        .components()
        .iter()
        .map(|c| {
            let hv = c.hurst.value();
            let p = 2.0 * hv + 2.0;
            let bracket = second_difference(p, nf) - 2.0;
            c.scale2 * h.powf(2.0 * hv) * bracket / ((2.0 * hv + 1.0) * p)
        })
        .sum()
}

/// `(N+1)^p + (N−1)^p − 2N^p`, via `2N^p Σ_{m even ≥ 2} C(p, m) N^{−m}` once
/// the direct form starts losing digits.
fn second_difference(p: f64, nf: f64) -> f64 {
    if nf < 16.0 {
        return pow0(nf + 1.0, p) + pow0(nf - 1.0, p) - 2.0 * pow0(nf, p);
    }
    let x = 1.0 / nf;
    let mut binom = 1.0;
    let mut xm = 1.0;
    let mut sum = 0.0;
    for m in 1..=80u32 {
        let mf = f64::from(m);
        binom *= (p - mf + 1.0) / mf;
        xm *= x;
        if m % 2 == 1 {
            continue;
        }
        let term = binom * xm;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    2.0 * nf.powf(p) * sum
}

/// `Var(X_{Nh} − X_0)` assembled from the nifBm variance and covariance.
pub fn two_point_noise_variance_assembled(model: &NoiseModel, h: f64, n: usize) -> Result<f64> {
    let t = n as f64 * h;
    let mut total = 0.0;
    for c in model.components() {
        let v = nifbm_var(c.hurst, h, t) + nifbm_var(c.hurst, h, 0.0)
            - 2.0 * nifbm_cov(c.hurst, h, 0.0, t)?;
        total += c.scale2 * v;
    }
    Ok(total)
}

/// Result of the two-stage procedure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TwoStageEstimate {
    pub drift: DriftEstimate,
    pub noise: NoiseEstimate,
    /// Set when `N^{0.99}/|G_N| ≥ 1`, i.e. the drift does not visibly
    /// dominate the noise growth and the first stage may be inconsistent.
    pub weak_drift: bool,
}

/// Estimates the drift from the end points, removes it, and estimates the
/// noise parameters from the residual increments on a shared horizon.
///
/// `y` and `g` are the observed levels `Y_0..=Y_M` and drift samples
/// `G_0..=G_M` at spacing `h`.
pub fn two_stage_estimate(
    y: &[f64],
    g: &[f64],
    h: f64,
    kind: ModelKind,
) -> Result<TwoStageEstimate> {
    if y.len() != g.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            found: g.len(),
        });
    }
    if g.first().copied() != Some(0.0) {
        return Err(invalid("g", "G(0) must be 0"));
    }
    let m = y.len() - 1;
    let g_n = g[m];
    let drift = drift_two_point(y[0], y[m], g_n, None);
    let weak_drift = (m as f64).powf(0.99) / g_n.abs() >= 1.0;
    if weak_drift {
        log::warn!(
            "drift G_N = {g_n} is small relative to N = {m}; drift removal may be unreliable"
        );
    }
    let residual: Vec<f64> = (0..m)
        .map(|k| (y[k + 1] - y[k]) - drift.mu_hat * (g[k + 1] - g[k]))
        .collect();
    let grid = SampleGrid::new(h, m, Aggregation::ONE)?;
    let series = IncrementSeries::new(grid, residual)?;
    let xi = shared_horizon_xi(&series, kind.levels())?;
    let noise = estimate_noise(&xi, h, kind)?;
    Ok(TwoStageEstimate {
        drift,
        noise,
        weak_drift,
    })
}
