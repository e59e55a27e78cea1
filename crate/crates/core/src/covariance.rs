//! Closed-form covariances of fBm, nifBm, and their increments.
//!
//! nifBm with window `h` is the moving average `X_t = (1/h) ∫_t^{t+h} W_u du`
//! of a fractional Brownian motion `W` with Hurst index `H`. Its increments
//! at step `h` are stationary with autocovariance `h^{2H} γ(H, n)`.

use crate::error::{invalid, Error, Result};

/// Hurst index, strictly inside (0, 1).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct HurstIndex(f64);

impl HurstIndex {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Self(value))
        } else {
            Err(invalid("H", format!("{value} is not in (0, 1)")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for HurstIndex {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

/// Parameters of a single scaled nifBm `a · X^{h,H}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NifbmParams {
    pub hurst: HurstIndex,
    pub h: f64,
    pub a2: f64,
}

impl NifbmParams {
    pub fn new(hurst: f64, h: f64, a2: f64) -> Result<Self> {
        check_positive("h", h)?;
        check_positive("a2", a2)?;
        Ok(Self {
            hurst: HurstIndex::new(hurst)?,
            h,
            a2,
        })
    }
}

/// Parameters of `a · X^{h,H1} + b · X^{h,H2}` with independent components.
///
/// The canonical ordering keeps the larger Hurst index first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixedParams {
    pub h1: HurstIndex,
    pub h2: HurstIndex,
    pub a2: f64,
    pub b2: f64,
}

impl MixedParams {
    /// Builds the parameter set; requires `h1 > h2`.
    pub fn new(h1: f64, h2: f64, a2: f64, b2: f64) -> Result<Self> {
        let (h1, h2) = (HurstIndex::new(h1)?, HurstIndex::new(h2)?);
        check_positive("a2", a2)?;
        check_positive("b2", b2)?;
        if h1.value() <= h2.value() {
            return Err(invalid(
                "H1",
                format!("H1 = {} must exceed H2 = {}", h1.value(), h2.value()),
            ));
        }
        Ok(Self { h1, h2, a2, b2 })
    }

    /// Builds the canonical parameter set from two (Hurst, scale) pairs in
    /// any order, e.g. as listed with the smaller index first.
    pub fn from_pairs(first: (f64, f64), second: (f64, f64)) -> Result<Self> {
        if first.0 >= second.0 {
            Self::new(first.0, second.0, first.1, second.1)
        } else {
            Self::new(second.0, first.0, second.1, first.1)
        }
    }
}

/// One independent nifBm component with variance scale `scale2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Component {
    pub hurst: HurstIndex,
    pub scale2: f64,
}

/// The noise model: one scaled nifBm or a mixture of two.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseModel {
    One { hurst: HurstIndex, a2: f64 },
    Two(MixedParams),
}

impl NoiseModel {
    pub fn components(&self) -> Vec<Component> {
        match *self {
            NoiseModel::One { hurst, a2 } => vec![Component { hurst, scale2: a2 }],
            NoiseModel::Two(p) => vec![
                Component {
                    hurst: p.h1,
                    scale2: p.a2,
                },
                Component {
                    hurst: p.h2,
                    scale2: p.b2,
                },
            ],
        }
    }

    /// Autocovariance at lag `n` of the increments at width `j·h`.
    pub fn increment_autocov(&self, h: f64, j: Aggregation, n: u64) -> f64 {
        components_increment_autocov(&self.components(), h, j, n)
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseModel::One { .. } => "one-nifbm",
            NoiseModel::Two(_) => "two-nifbm",
        }
    }
}

impl From<NifbmParams> for NoiseModel {
    fn from(p: NifbmParams) -> Self {
        NoiseModel::One {
            hurst: p.hurst,
            a2: p.a2,
        }
    }
}

impl From<MixedParams> for NoiseModel {
    fn from(p: MixedParams) -> Self {
        NoiseModel::Two(p)
    }
}

/// Aggregation factor `j ∈ {1, 2, 4, 8}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Aggregation(u32);

impl Aggregation {
    pub const ONE: Self = Self(1);
    pub const TWO: Self = Self(2);
    pub const FOUR: Self = Self(4);
    pub const EIGHT: Self = Self(8);
    pub const ALL: [Self; 4] = [Self::ONE, Self::TWO, Self::FOUR, Self::EIGHT];

    pub fn new(j: u32) -> Result<Self> {
        match j {
            1 | 2 | 4 | 8 => Ok(Self(j)),
            _ => Err(invalid("j", format!("{j} is not one of 1, 2, 4, 8"))),
        }
    }

    pub fn factor(self) -> u32 {
        self.0
    }

    /// Number of pairwise aggregation steps from width `h`, i.e. `log2 j`.
    pub fn levels(self) -> u32 {
        self.0.trailing_zeros()
    }

    /// Position in [`Aggregation::ALL`].
    pub fn index(self) -> usize {
        self.levels() as usize
    }
}

/// First row of a symmetric Toeplitz covariance matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct AutocovSequence {
    values: Vec<f64>,
}

impl AutocovSequence {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        match values.first() {
            None => Err(Error::TooShort { needed: 1, got: 0 }),
            Some(&v) if !(v > 0.0 && v.is_finite()) => Err(invalid(
                "values[0]",
                format!("variance {v} must be positive"),
            )),
            _ if values.iter().any(|v| !v.is_finite()) => {
                Err(invalid("values", "non-finite autocovariance"))
            }
            _ => Ok(Self { values }),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Dense symmetric matrix, row-major.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.values.len();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                m[i * n + k] = self.values[i.abs_diff(k)];
            }
        }
        m
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("{v} must be positive and finite")))
    }
}

/// `x^p` for `x ≥ 0`, with `0^p = 0`.
#[inline]
pub(crate) fn pow0(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.powf(p)
    }
}

/// Covariance of fBm: `½(s^{2H} + t^{2H} − |s−t|^{2H})`.
pub fn fbm_cov(hurst: HurstIndex, s: f64, t: f64) -> f64 {
    debug_assert!(s >= 0.0 && t >= 0.0);
    let p = 2.0 * hurst.value();
    0.5 * (pow0(s, p) + pow0(t, p) - pow0((s - t).abs(), p))
}

/// Covariance of the fBm increments `W_t − W_s` and `W_v − W_u`.
///
/// Valid for any two intervals `[s, t]` and `[u, v]`, overlapping or not.
pub fn fbm_increment_cov(hurst: HurstIndex, s: f64, t: f64, u: f64, v: f64) -> Result<f64> {
    if !(0.0 <= s && s <= t && 0.0 <= u && u <= v) {
        return Err(invalid(
            "times",
            format!("need 0 <= s <= t and 0 <= u <= v, got ({s}, {t}, {u}, {v})"),
        ));
    }
    let p = 2.0 * hurst.value();
    let f = |x: f64| pow0(x.abs(), p);
    Ok(0.5 * (f(v - s) + f(u - t) - f(v - t) - f(u - s)))
}

/// `E[X_t X_s]` for nifBm with window `h`, `s ≥ t ≥ 0`.
pub fn nifbm_cov(hurst: HurstIndex, h: f64, t: f64, s: f64) -> Result<f64> {
    check_positive("h", h)?;
    if !(t >= 0.0 && s >= t) {
        return Err(invalid(
            "times",
            format!("need s >= t >= 0, got t = {t}, s = {s}"),
        ));
    }
    let hv = hurst.value();
    let q = 2.0 * hv + 1.0;
    let p = 2.0 * hv + 2.0;
    let rho = s - t;
    let near = (pow0(t + h, q) - pow0(t, q) + pow0(s + h, q) - pow0(s, q)) / (2.0 * h * q);
    let far =
        (2.0 * pow0(rho, p) - pow0(rho + h, p) - pow0((rho - h).abs(), p)) / (2.0 * h * h * q * p);
    Ok(near + far)
}

/// `E[X_t²]` for nifBm with window `h`.
pub fn nifbm_var(hurst: HurstIndex, h: f64, t: f64) -> f64 {
    debug_assert!(h > 0.0 && t >= 0.0);
    let hv = hurst.value();
    let q = 2.0 * hv + 1.0;
    (pow0(t + h, q) - pow0(t, q)) / (h * q) - pow0(h, 2.0 * hv) / (q * (2.0 * hv + 2.0))
}

/// Lags from which [`gamma`] switches to the series expansion.
const GAMMA_SERIES_FROM: u64 = 16;

/// Normalized increment autocovariance `γ(H, n)`.
pub fn gamma(hurst: HurstIndex, n: u64) -> f64 {
    gamma_raw(hurst.value(), n)
}

/// `γ` for raw `H ∈ (0, 1]`; used by the root finder and the Jacobian.
pub(crate) fn gamma_raw(hv: f64, n: u64) -> f64 {
    let p = 2.0 * hv + 2.0;
    let denom = 4.0 * (2.0 * hv + 1.0) * (hv + 1.0);
    if n < GAMMA_SERIES_FROM {
        let x = n as f64;
        let f = |y: f64| pow0(y.abs(), p);
        (f(x - 2.0) - 4.0 * f(x - 1.0) + 6.0 * f(x) - 4.0 * f(x + 1.0) + f(x + 2.0)) / denom
    } else {
        let x = n as f64;
        let sum: f64 = gamma_expansion(hv, 1.0 / x).iter().sum();
        x.powf(p) * sum / denom
    }
}

/// Terms `C(p, m) (2^{m+1} − 8) x^m` for even `m ≥ 4` of the expansion of
/// `(1−2x)^p − 4(1−x)^p + 6 − 4(1+x)^p + (1+2x)^p`, `p = 2H + 2`, until
/// they stop contributing. Converges for `x < ½`.
pub(crate) fn gamma_expansion(hv: f64, x: f64) -> Vec<f64> {
    let p = 2.0 * hv + 2.0;
    let mut terms = Vec::with_capacity(16);
    let mut binom = 1.0;
    let mut xm = 1.0;
    let mut sum = 0.0f64;
    for m in 1..=80u32 {
        let mf = f64::from(m);
        binom *= (p - mf + 1.0) / mf;
        xm *= x;
        if m < 4 || m % 2 == 1 {
            continue;
        }
        let term = binom * (2f64.powi(m as i32 + 1) - 8.0) * xm;
        terms.push(term);
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    terms
}

/// Leading-order behaviour `H(2H−1) n^{2H−2}` of `γ(H, n)`.
pub fn gamma_asymptotic(hurst: HurstIndex, n: u64) -> f64 {
    let hv = hurst.value();
    hv * (2.0 * hv - 1.0) * (n as f64).powf(2.0 * hv - 2.0)
}

/// Increment autocovariance `h^{2H} γ(H, n)` at unit scale.
pub fn increment_autocov(params: &NifbmParams, n: u64) -> f64 {
    params.h.powf(2.0 * params.hurst.value()) * gamma(params.hurst, n)
}

/// Autocovariance at lag `n` of mixed increments at width `j·h`:
/// `a²(jh)^{2H1} γ(H1, n) + b²(jh)^{2H2} γ(H2, n)`.
pub fn mixed_increment_autocov(params: &MixedParams, h: f64, j: Aggregation, n: u64) -> f64 {
    NoiseModel::Two(*params).increment_autocov(h, j, n)
}

/// Sum of component autocovariances at width `j·h`.
pub fn components_increment_autocov(
    components: &[Component],
    h: f64,
    j: Aggregation,
    n: u64,
) -> f64 {
    let w = f64::from(j.factor()) * h;
    components
        .iter()
        .map(|c| c.scale2 * w.powf(2.0 * c.hurst.value()) * gamma(c.hurst, n))
        .sum()
}

/// Autocovariance sequence of `len` consecutive increments at width `j·h`.
pub fn autocov_sequence(model: &NoiseModel, h: f64, j: Aggregation, len: usize) -> AutocovSequence {
    let comps = model.components();
    let values = (0..len as u64)
        .map(|n| components_increment_autocov(&comps, h, j, n))
        .collect();
    AutocovSequence { values }
}

/// Root of `γ(H, 1) = 0`: below it, neighbouring increments are negatively
/// correlated.
pub fn find_h0() -> f64 {
    let (mut lo, mut hi) = (0.1, 0.5);
    let f_lo = gamma_raw(lo, 1);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        let f_mid = gamma_raw(mid, 1);
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
