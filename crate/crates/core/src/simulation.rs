//! Exact Gaussian sampling of increment series, aggregation and drift.

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::covariance::{autocov_sequence, Aggregation, AutocovSequence, Component, NoiseModel};
use crate::error::{invalid, Error, Result};
use crate::linalg::{toeplitz_cholesky, CholeskyFactor};

/// Largest series length sampled through a stored Cholesky factor
/// (experiment horizons are capped at 2^13 plus aggregation overlap).
pub const MAX_CHOLESKY_LEN: usize = 1 << 14;

/// Replications per batched matrix product.
const BATCH: usize = 16;

/// Seed of one replication: `stream` selects an independent ChaCha stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// `len` standard normal draws from the stream of `seed`.
pub fn standard_normals(seed: RngSeed, len: usize) -> Vec<f64> {
    let mut rng = seed.rng();
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Equidistant observation grid `t_k = k·j·h`, `k = 0..=n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleGrid {
    pub h: f64,
    pub n: usize,
    pub j: Aggregation,
}

impl SampleGrid {
    pub fn new(h: f64, n: usize, j: Aggregation) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid("h", format!("{h} must be positive and finite")));
        }
        if n == 0 {
            return Err(invalid("N", "need at least one increment"));
        }
        Ok(Self { h, n, j })
    }

    /// Observation time of index `k`.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * f64::from(self.j.factor()) * self.h
    }
}

/// Increments observed on a [`SampleGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct IncrementSeries {
    pub grid: SampleGrid,
    pub values: Vec<f64>,
}

impl IncrementSeries {
    pub fn new(grid: SampleGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::LengthMismatch {
                expected: grid.n,
                found: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Cumulative path `Y_0 = 0, Y_k = Σ_{i<k} ΔY_i`.
    pub fn path(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.values.len() + 1);
        out.push(0.0);
        for v in &self.values {
            acc += v;
            out.push(acc);
        }
        out
    }
}

/// Deterministic drift `μ G(t)` sampled at the observation times.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftSpec {
    pub mu: f64,
    pub g_values: Vec<f64>,
}

impl DriftSpec {
    pub fn new(mu: f64, g_values: Vec<f64>) -> Result<Self> {
        match g_values.first() {
            None => return Err(Error::TooShort { needed: 2, got: 0 }),
            Some(&g0) if g0 != 0.0 => {
                return Err(invalid("g_values", format!("G(0) must be 0, got {g0}")))
            }
            _ => {}
        }
        if g_values.iter().all(|&g| g == 0.0) {
            return Err(invalid("g_values", "G vanishes on the whole grid"));
        }
        if !mu.is_finite() || g_values.iter().any(|g| !g.is_finite()) {
            return Err(invalid("drift", "non-finite value"));
        }
        Ok(Self { mu, g_values })
    }

    /// Increments `G_{k+1} − G_k`.
    pub fn g_increments(&self) -> Vec<f64> {
        self.g_values.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Named deterministic drift shapes.
#[derive(Clone, Debug, PartialEq)]
pub enum DriftFunction {
    /// `5 cos t − e^{−4t} + 2t²`, shifted so that `G(0) = 0`.
    Benchmark,
    /// `G(t) = t`.
    Linear,
    /// Values at `t_k = k·step`, starting with `G_0 = 0`.
    Tabulated(Vec<f64>),
}

impl DriftFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            DriftFunction::Benchmark => 5.0 * t.cos() - (-4.0 * t).exp() + 2.0 * t * t - 4.0,
            DriftFunction::Linear => t,
            DriftFunction::Tabulated(_) => panic!("tabulated drift has no continuous form"),
        }
    }

    /// `G` at `t_k = k·step` for `k = 0..points`.
    pub fn sample(&self, points: usize, step: f64) -> Result<Vec<f64>> {
        match self {
            DriftFunction::Tabulated(v) => {
                if v.len() < points {
                    return Err(Error::TooShort {
                        needed: points,
                        got: v.len(),
                    });
                }
                Ok(v[..points].to_vec())
            }
            _ => Ok((0..points).map(|k| self.eval(k as f64 * step)).collect()),
        }
    }
}

/// Cholesky factor of the Toeplitz covariance with first row `cov`.
pub fn cholesky_factor(cov: &AutocovSequence) -> Result<CholeskyFactor> {
    toeplitz_cholesky(cov)
}

/// Exact sampler for one noise model on one grid; the factor is computed
/// once and reused for every replication.
#[derive(Clone, Debug)]
pub struct IncrementSampler {
    grid: SampleGrid,
    factor: CholeskyFactor,
}

impl IncrementSampler {
    pub fn new(model: &NoiseModel, grid: SampleGrid) -> Result<Self> {
        check_envelope(grid.n)?;
        let cov = autocov_sequence(model, grid.h, grid.j, grid.n);
        Ok(Self {
            grid,
            factor: cholesky_factor(&cov)?,
        })
    }

    pub fn grid(&self) -> SampleGrid {
        self.grid
    }

    pub fn factor(&self) -> &CholeskyFactor {
        &self.factor
    }

    pub fn sample(&self, seed: RngSeed) -> IncrementSeries {
        let z = standard_normals(seed, self.grid.n);
        IncrementSeries {
            grid: self.grid,
            values: self.factor.mul_vec(&z),
        }
    }

    /// One series per stream in `streams`, bitwise equal to calling
    /// [`Self::sample`] per stream.
    pub fn sample_streams(&self, seed: u64, streams: Range<u64>) -> Vec<IncrementSeries> {
        let n = self.grid.n;
        let mut out = Vec::with_capacity(streams.clone().count());
        let all: Vec<u64> = streams.collect();
        for chunk in all.chunks(BATCH) {
            let b = chunk.len();
            let mut z = vec![0.0; n * b];
            for (col, &s) in chunk.iter().enumerate() {
                for (i, v) in standard_normals(RngSeed::new(seed, s), n)
                    .into_iter()
                    .enumerate()
                {
                    z[i * b + col] = v;
                }
            }
            let y = self.factor.mul_batch(&z, b);
            for col in 0..b {
                out.push(IncrementSeries {
                    grid: self.grid,
                    values: (0..n).map(|i| y[i * b + col]).collect(),
                });
            }
        }
        out
    }
}

fn check_envelope(n: usize) -> Result<()> {
    if n > MAX_CHOLESKY_LEN {
        Err(invalid(
            "N",
            format!(
                "{n} exceeds the Cholesky envelope {MAX_CHOLESKY_LEN}; use the circulant sampler"
            ),
        ))
    } else {
        Ok(())
    }
}

/// Draws `L z` with `z` standard normal from `seed`, where `L` is the
/// Cholesky factor of the exact increment covariance on `grid`.
pub fn sample_increments(
    model: &NoiseModel,
    grid: SampleGrid,
    seed: RngSeed,
) -> Result<IncrementSeries> {
    Ok(IncrementSampler::new(model, grid)?.sample(seed))
}

/// Samples every aggregation level from one set of normals per component:
/// the width-`jh` series is `Σ_c √scale_c (jh)^{H_c} L_c z_c`, with `L_c`
/// the unit-width factor of component `c`.
///
/// Each series has the exact law of increments at width `jh`; series at
/// different `j` are deterministic rescalings of each other per component
/// rather than aggregates of one path.
#[derive(Clone, Debug)]
pub struct ComponentSampler {
    components: Vec<Component>,
    factors: Vec<CholeskyFactor>,
    h: f64,
    n: usize,
}

impl ComponentSampler {
    pub fn new(model: &NoiseModel, h: f64, n: usize) -> Result<Self> {
        SampleGrid::new(h, n, Aggregation::ONE)?;
        check_envelope(n)?;
        let components = model.components();
        let factors = components
            .iter()
            .map(|c| {
                let unit = NoiseModel::One {
                    hurst: c.hurst,
                    a2: 1.0,
                };
                cholesky_factor(&autocov_sequence(&unit, 1.0, Aggregation::ONE, n))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            components,
            factors,
            h,
            n,
        })
    }

    /// Series at each requested aggregation factor, in the order given.
    pub fn sample(&self, seed: RngSeed, levels: &[Aggregation]) -> Vec<IncrementSeries> {
        let z = standard_normals(seed, self.n * self.factors.len());
        let unit: Vec<Vec<f64>> = self
            .factors
            .iter()
            .enumerate()
            .map(|(c, f)| f.mul_vec(&z[c * self.n..(c + 1) * self.n]))
            .collect();
        self.combine(&unit, levels)
    }

    /// [`Self::sample`] for every stream, batched.
    pub fn sample_streams(
        &self,
        seed: u64,
        streams: Range<u64>,
        levels: &[Aggregation],
    ) -> Vec<Vec<IncrementSeries>> {
        let n = self.n;
        let nc = self.factors.len();
        let all: Vec<u64> = streams.collect();
        let mut out = Vec::with_capacity(all.len());
        for chunk in all.chunks(BATCH) {
            let b = chunk.len();
            let mut zs = vec![vec![0.0; n * b]; nc];
            for (col, &s) in chunk.iter().enumerate() {
                let z = standard_normals(RngSeed::new(seed, s), n * nc);
                for c in 0..nc {
                    for i in 0..n {
                        zs[c][i * b + col] = z[c * n + i];
                    }
                }
            }
            let ys: Vec<Vec<f64>> = self
                .factors
                .iter()
                .zip(&zs)
                .map(|(f, z)| f.mul_batch(z, b))
                .collect();
            for col in 0..b {
                let unit: Vec<Vec<f64>> = ys
                    .iter()
                    .map(|y| (0..n).map(|i| y[i * b + col]).collect())
                    .collect();
                out.push(self.combine(&unit, levels));
            }
        }
        out
    }

    fn combine(&self, unit: &[Vec<f64>], levels: &[Aggregation]) -> Vec<IncrementSeries> {
        levels
            .iter()
            .map(|&j| {
                let w = f64::from(j.factor()) * self.h;
                let coefs: Vec<f64> = self
                    .components
                    .iter()
                    .map(|c| c.scale2.sqrt() * w.powf(c.hurst.value()))
                    .collect();
                let values = (0..self.n)
                    .map(|i| coefs.iter().zip(unit).map(|(a, u)| a * u[i]).sum())
                    .collect();
                IncrementSeries {
                    grid: SampleGrid {
                        h: self.h,
                        n: self.n,
                        j,
                    },
                    values,
                }
            })
            .collect()
    }
}

/// Exact sampler for long stationary series by circulant embedding.
///
/// Fails if the embedding is not positive semidefinite, so it never returns
/// an approximate law.
#[derive(Clone)]
pub struct CirculantSampler {
    n: usize,
    sqrt_eig: Vec<f64>,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl CirculantSampler {
    pub fn new(cov: &AutocovSequence) -> Result<Self> {
        let r = cov.values();
        let n = r.len();
        if n < 2 {
            return Err(Error::TooShort { needed: 2, got: n });
        }
        let m = 2 * (n - 1);
        let mut c: Vec<Complex<f64>> = (0..m)
            .map(|k| Complex::new(r[if k < n { k } else { m - k }], 0.0))
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut c);
        let max = c.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
        let mut sqrt_eig = Vec::with_capacity(m);
        for (k, z) in c.iter().enumerate() {
            if z.re < -1e-10 * max {
                return Err(Error::NegativeEmbedding {
                    index: k,
                    value: z.re,
                });
            }
            sqrt_eig.push((z.re.max(0.0) / m as f64).sqrt());
        }
        Ok(Self { n, sqrt_eig, fft })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn sample(&self, seed: RngSeed) -> Vec<f64> {
        let m = self.sqrt_eig.len();
        let z = standard_normals(seed, 2 * m);
        let mut w: Vec<Complex<f64>> = self
            .sqrt_eig
            .iter()
            .enumerate()
            .map(|(k, &s)| Complex::new(s * z[2 * k], s * z[2 * k + 1]))
            .collect();
        self.fft.process(&mut w);
        w[..self.n].iter().map(|c| c.re).collect()
    }
}

/// Increments at width `j·h` built from a finer series with the pairwise
/// recursion `ΔX^{2h}_k = ½(ΔX_{2k} + 2ΔX_{2k+1} + ΔX_{2k+2})`.
///
/// A base series of length `L` yields `⌊(L+1)/r⌋ − 1` outputs with
/// `r = j / base.j`; in particular `j·N + j − 1` base increments give `N`.
pub fn aggregate_increments(base: &IncrementSeries, j: Aggregation) -> Result<IncrementSeries> {
    let from = base.grid.j.factor();
    let to = j.factor();
    if to < from {
        return Err(invalid(
            "j",
            format!("cannot aggregate from factor {from} down to {to}"),
        ));
    }
    let ratio = (to / from) as usize;
    let out_len = (base.len() + 1) / ratio;
    if out_len < 2 {
        return Err(Error::TooShort {
            needed: 2 * ratio - 1,
            got: base.len(),
        });
    }
    let mut v = base.values.clone();
    for _ in 0..ratio.trailing_zeros() {
        let len = (v.len() - 1) / 2;
        v = (0..len)
            .map(|k| 0.5 * (v[2 * k] + 2.0 * v[2 * k + 1] + v[2 * k + 2]))
            .collect();
    }
    debug_assert_eq!(v.len(), out_len - 1);
    Ok(IncrementSeries {
        grid: SampleGrid {
            h: base.grid.h,
            n: v.len(),
            j,
        },
        values: v,
    })
}

/// Adds `μ ΔG_k` to every increment.
pub fn add_drift(increments: &IncrementSeries, drift: &DriftSpec) -> Result<IncrementSeries> {
    if drift.g_values.len() != increments.len() + 1 {
        return Err(Error::LengthMismatch {
            expected: increments.len() + 1,
            found: drift.g_values.len(),
        });
    }
    let values = increments
        .values
        .iter()
        .zip(drift.g_values.windows(2))
        .map(|(x, g)| x + drift.mu * (g[1] - g[0]))
        .collect();
    Ok(IncrementSeries {
        grid: increments.grid,
        values,
    })
}
