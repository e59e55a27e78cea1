//! Config-driven Monte Carlo experiments and their CSV/JSON output.
//!
//! A config file is flat TOML; see the README for the schema. Every
//! replication `r` of a grid point draws from stream `r` of the seed, so a
//! config fixes all output bytes (wall time is only written when
//! `record_timing = true`).

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{sigma0_one, SimulationMode};
use crate::covariance::{
    autocov_sequence, Aggregation, HurstIndex, MixedParams, NifbmParams, NoiseModel,
};
use crate::error::{Error, Result};
use crate::estimation::{
    drift_two_point, estimate_noise, shared_horizon_xi, two_point_noise_variance,
    two_stage_estimate, MleDrift, ModelKind, NoiseEstimate, XiStatistics,
};
use crate::simulation::{
    aggregate_increments, cholesky_factor, ComponentSampler, DriftFunction, IncrementSampler,
    IncrementSeries, SampleGrid,
};

/// Largest number of increments per grid point.
pub const MAX_N: usize = 1 << 13;

/// Stream indices processed together.
const CHUNK: u64 = 16;

/// CSV header of [`write_results`].
pub const CSV_HEADER: &str =
    "model,estimator,H1,H2,a2,b2,mu,h,N,j_mode,replications,mean,sd_emp,sd_theory,degenerate,seconds";

/// Estimators a config can request.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimator {
    MuHat,
    MuTilde,
    HHat,
    A2Hat,
    H1Hat,
    H2Hat,
    B2Hat,
}

impl Estimator {
    pub const ALL: [Self; 7] = [
        Self::MuHat,
        Self::MuTilde,
        Self::HHat,
        Self::A2Hat,
        Self::H1Hat,
        Self::H2Hat,
        Self::B2Hat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::MuHat => "mu_hat",
            Self::MuTilde => "mu_tilde",
            Self::HHat => "H_hat",
            Self::A2Hat => "a2_hat",
            Self::H1Hat => "H1_hat",
            Self::H2Hat => "H2_hat",
            Self::B2Hat => "b2_hat",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }

    fn is_drift(self) -> bool {
        matches!(self, Self::MuHat | Self::MuTilde)
    }

    fn is_noise(self) -> bool {
        !self.is_drift()
    }

    fn applies_to(self, kind: ModelKind) -> bool {
        match self {
            Self::MuHat | Self::MuTilde | Self::A2Hat => true,
            Self::HHat => kind == ModelKind::OneNifbm,
            Self::H1Hat | Self::H2Hat | Self::B2Hat => kind == ModelKind::TwoNifbm,
        }
    }
}

/// Drift `μ G(t)` with `G` sampled every `step` time units.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftConfig {
    pub mu: f64,
    pub function: DriftFunction,
    /// Time between consecutive samples of `G`; defaults to `h`.
    pub step: Option<f64>,
}

/// A validated experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub model: NoiseModel,
    pub drift: Option<DriftConfig>,
    /// `(h, N)` pairs.
    pub grid: Vec<(f64, usize)>,
    pub replications: usize,
    pub seed: u64,
    pub mode: SimulationMode,
    pub outputs: Vec<Estimator>,
    pub record_timing: bool,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Number {
    Int(i64),
    Float(f64),
}

impl Number {
    fn value(&self) -> f64 {
        match *self {
            Number::Int(i) => i as f64,
            Number::Float(f) => f,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: String,
    hurst: Option<Number>,
    hurst1: Option<Number>,
    hurst2: Option<Number>,
    a2: Number,
    b2: Option<Number>,
    mu: Option<Number>,
    drift: Option<String>,
    drift_values: Option<Vec<Number>>,
    drift_step: Option<Number>,
    h: Vec<Number>,
    n: Vec<u64>,
    replications: Option<u64>,
    seed: Option<u64>,
    simulation_mode: Option<String>,
    outputs: Vec<String>,
    record_timing: Option<bool>,
}

fn cfg_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("field `{field}`: {msg}"))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        let kind = ModelKind::parse(&raw.model).map_err(|e| cfg_err("model", e))?;
        let a2 = raw.a2.value();
        let model = match kind {
            ModelKind::OneNifbm => {
                for (name, present) in [
                    ("hurst1", raw.hurst1.is_some()),
                    ("hurst2", raw.hurst2.is_some()),
                    ("b2", raw.b2.is_some()),
                ] {
                    if present {
                        return Err(cfg_err(name, "not used by model one-nifbm"));
                    }
                }
                let h = raw
                    .hurst
                    .ok_or_else(|| cfg_err("hurst", "required"))?
                    .value();
                let hurst = HurstIndex::new(h).map_err(|e| cfg_err("hurst", e))?;
                if !(a2 > 0.0 && a2.is_finite()) {
                    return Err(cfg_err("a2", "must be positive"));
                }
                NoiseModel::One { hurst, a2 }
            }
            ModelKind::TwoNifbm => {
                if raw.hurst.is_some() {
                    return Err(cfg_err(
                        "hurst",
                        "use hurst1 and hurst2 for model two-nifbm",
                    ));
                }
                let h1 = raw
                    .hurst1
                    .ok_or_else(|| cfg_err("hurst1", "required"))?
                    .value();
                let h2 = raw
                    .hurst2
                    .ok_or_else(|| cfg_err("hurst2", "required"))?
                    .value();
                let b2 = raw.b2.ok_or_else(|| cfg_err("b2", "required"))?.value();
                let p = MixedParams::from_pairs((h1, a2), (h2, b2))
                    .map_err(|e| cfg_err("hurst1/hurst2/a2/b2", e))?;
                NoiseModel::Two(p)
            }
        };

        let drift = match raw.drift.as_deref() {
            None => {
                if raw.mu.is_some() || raw.drift_values.is_some() || raw.drift_step.is_some() {
                    return Err(cfg_err(
                        "drift",
                        "required when mu, drift_values or drift_step is set",
                    ));
                }
                None
            }
            Some(name) => {
                let function = match name {
                    "benchmark" => DriftFunction::Benchmark,
                    "linear" => DriftFunction::Linear,
                    "tabulated" => {
                        let v = raw.drift_values.as_ref().ok_or_else(|| {
                            cfg_err("drift_values", "required for tabulated drift")
                        })?;
                        let v: Vec<f64> = v.iter().map(Number::value).collect();
                        if v.first() != Some(&0.0) {
                            return Err(cfg_err("drift_values", "first value must be 0"));
                        }
                        DriftFunction::Tabulated(v)
                    }
                    other => return Err(cfg_err("drift", format!("unknown drift `{other}`"))),
                };
                if name != "tabulated" && raw.drift_values.is_some() {
                    return Err(cfg_err(
                        "drift_values",
                        "only used with drift = \"tabulated\"",
                    ));
                }
                let mu = raw
                    .mu
                    .ok_or_else(|| cfg_err("mu", "required with a drift"))?
                    .value();
                if !mu.is_finite() {
                    return Err(cfg_err("mu", "must be finite"));
                }
                let step = raw.drift_step.map(|s| s.value());
                if let Some(s) = step {
                    if !(s > 0.0 && s.is_finite()) {
                        return Err(cfg_err("drift_step", "must be positive"));
                    }
                }
                Some(DriftConfig { mu, function, step })
            }
        };

        let mode = match raw.simulation_mode.as_deref() {
            None | Some("direct-per-j") => SimulationMode::DirectPerJ,
            Some("aggregate") => SimulationMode::Aggregate,
            Some(other) => {
                return Err(cfg_err(
                    "simulation_mode",
                    format!("unknown mode `{other}`"),
                ))
            }
        };

        if raw.h.is_empty() {
            return Err(cfg_err("h", "at least one value required"));
        }
        if raw.n.is_empty() {
            return Err(cfg_err("n", "at least one value required"));
        }
        let mut grid = Vec::new();
        for h in &raw.h {
            let h = h.value();
            if !(h > 0.0 && h.is_finite()) {
                return Err(cfg_err("h", format!("{h} must be positive")));
            }
            for &n in &raw.n {
                grid.push((h, n as usize));
            }
        }

        let mut outputs = Vec::new();
        for name in &raw.outputs {
            let e = Estimator::parse(name)
                .ok_or_else(|| cfg_err("outputs", format!("unknown estimator `{name}`")))?;
            if !outputs.contains(&e) {
                outputs.push(e);
            }
        }

        let config = ExperimentConfig {
            model,
            drift,
            grid,
            replications: raw.replications.unwrap_or(100) as usize,
            seed: raw.seed.unwrap_or(0),
            mode,
            outputs,
            record_timing: raw.record_timing.unwrap_or(false),
        };
        config.validate()?;
        Ok(config)
    }

    /// Checks the cross-field invariants.
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(cfg_err("replications", "must be at least 1"));
        }
        if self.outputs.is_empty() {
            return Err(cfg_err("outputs", "at least one estimator required"));
        }
        let kind = self.kind();
        for e in &self.outputs {
            if e.is_drift() && self.drift.is_none() {
                return Err(cfg_err("outputs", format!("{} needs a drift", e.name())));
            }
            if !e.applies_to(kind) {
                return Err(cfg_err(
                    "outputs",
                    format!("{} does not apply to model {}", e.name(), kind.name()),
                ));
            }
        }
        let noise = self.outputs.iter().any(|e| e.is_noise());
        for &(h, n) in &self.grid {
            if !(h > 0.0 && h.is_finite()) {
                return Err(cfg_err("h", format!("{h} must be positive")));
            }
            if n == 0 || n > MAX_N {
                return Err(cfg_err("n", format!("{n} is outside 1..={MAX_N}")));
            }
            if noise && self.mode == SimulationMode::Aggregate {
                let jmax = jmax(kind);
                if n % jmax != 0 || n < 2 * jmax {
                    return Err(cfg_err(
                        "n",
                        format!(
                            "aggregate mode needs N to be a multiple of {jmax} and at least {}",
                            2 * jmax
                        ),
                    ));
                }
            }
            if noise && self.mode == SimulationMode::DirectPerJ && n < 2 {
                return Err(cfg_err("n", "noise estimators need N >= 2"));
            }
        }
        if let Some(d) = &self.drift {
            if let DriftFunction::Tabulated(v) = &d.function {
                let need = self
                    .grid
                    .iter()
                    .map(|&(_, n)| self.drift_points(n))
                    .max()
                    .unwrap_or(0);
                if v.len() < need {
                    return Err(cfg_err(
                        "drift_values",
                        format!(
                            "need at least {need} values for the largest grid point, got {}",
                            v.len()
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> ModelKind {
        match self.model {
            NoiseModel::One { .. } => ModelKind::OneNifbm,
            NoiseModel::Two(_) => ModelKind::TwoNifbm,
        }
    }

    fn wants_noise(&self) -> bool {
        self.outputs.iter().any(|e| e.is_noise())
    }

    fn wants_drift(&self) -> bool {
        self.outputs.iter().any(|e| e.is_drift())
    }

    /// Width-`h` increments whose drift samples are needed at horizon `n`.
    fn base_len(&self, n: usize) -> usize {
        if !self.wants_noise() {
            return n;
        }
        let j = jmax(self.kind());
        match self.mode {
            SimulationMode::Aggregate => n + j - 1,
            SimulationMode::DirectPerJ => j * n + j - 1,
        }
    }

    fn drift_points(&self, n: usize) -> usize {
        self.base_len(n) + 1
    }

    pub fn mode_name(&self) -> &'static str {
        mode_name(self.mode)
    }
}

fn mode_name(mode: SimulationMode) -> &'static str {
    match mode {
        SimulationMode::Aggregate => "aggregate",
        SimulationMode::DirectPerJ => "direct-per-j",
    }
}

fn jmax(kind: ModelKind) -> usize {
    kind.levels().iter().map(|j| j.factor()).max().unwrap_or(1) as usize
}

/// Summary of one estimator at one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub model: String,
    pub estimator: String,
    #[serde(rename = "H1")]
    pub h1: f64,
    #[serde(rename = "H2")]
    pub h2: Option<f64>,
    pub a2: f64,
    pub b2: Option<f64>,
    pub mu: f64,
    pub h: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub j_mode: String,
    pub replications: usize,
    pub mean: f64,
    pub sd_emp: f64,
    pub sd_theory: Option<f64>,
    pub degenerate: usize,
    pub seconds: f64,
}

/// Per-replication values, one per requested estimator.
struct Outcome {
    values: Vec<f64>,
    degenerate: Vec<bool>,
}

/// Quantities fixed for a grid point.
struct GridPoint<'a> {
    config: &'a ExperimentConfig,
    h: f64,
    n: usize,
    levels: Vec<Aggregation>,
    /// Base drift increments `ΔG`, and their aggregates per level.
    dg: Option<Vec<f64>>,
    dg_levels: Vec<Vec<f64>>,
    g_n: f64,
    mle: Option<MleDrift>,
}

impl GridPoint<'_> {
    fn mu(&self) -> f64 {
        self.config.drift.as_ref().map_or(0.0, |d| d.mu)
    }

    fn evaluate_aggregate(&self, base: &IncrementSeries) -> Result<Outcome> {
        let mut y = base.clone();
        if let Some(dg) = &self.dg {
            for (v, g) in y.values.iter_mut().zip(dg) {
                *v += self.mu() * g;
            }
        }
        let drift = self.drift_estimates(&y.values[..self.n])?;
        let noise = if !self.config.wants_noise() {
            None
        } else if let Some(dg) = &self.dg {
            let levels_y = y.path();
            let mut g = Vec::with_capacity(dg.len() + 1);
            g.push(0.0);
            let mut acc = 0.0;
            for d in dg {
                acc += d;
                g.push(acc);
            }
            let kind = self.config.kind();
            Some(two_stage_estimate(&levels_y, &g, self.h, kind)?.noise)
        } else {
            let xi = shared_horizon_xi(base, &self.levels)?;
            Some(estimate_noise(&xi, self.h, self.config.kind())?)
        };
        Ok(self.outcome(drift, noise))
    }

    fn evaluate_direct(&self, series: &[IncrementSeries]) -> Result<Outcome> {
        let mu = self.mu();
        let y1: Vec<f64> = match self.dg_levels.first() {
            Some(dg) => series[0]
                .values
                .iter()
                .zip(dg)
                .map(|(x, g)| x + mu * g)
                .collect(),
            None => series[0].values.clone(),
        };
        let drift = self.drift_estimates(&y1)?;
        let noise = if self.config.wants_noise() {
            let mu_tilde = if self.dg.is_some() {
                drift_two_point(0.0, y1.iter().sum(), self.g_n, None).mu_hat
            } else {
                0.0
            };
            let mut xi = XiStatistics::new();
            for (k, s) in series.iter().enumerate() {
                let resid = mu - mu_tilde;
                let sum: f64 = match self.dg_levels.get(k) {
                    Some(dg) => s
                        .values
                        .iter()
                        .zip(dg)
                        .map(|(x, g)| (x + resid * g).powi(2))
                        .sum(),
                    None => s.values.iter().map(|x| x * x).sum(),
                };
                xi.insert(s.grid.j, sum / s.len() as f64, s.len());
            }
            Some(estimate_noise(&xi, self.h, self.config.kind())?)
        } else {
            None
        };
        Ok(self.outcome(drift, noise))
    }

    /// `(μ̂, μ̃)` on the first `N` increments, when a drift is present.
    fn drift_estimates(&self, dy: &[f64]) -> Result<Option<(f64, f64, bool)>> {
        if self.dg.is_none() || !self.config.wants_drift() {
            return Ok(None);
        }
        let mle = match &self.mle {
            Some(m) => m.estimate(dy)?.mu_hat,
            None => f64::NAN,
        };
        let tp = drift_two_point(0.0, dy.iter().sum(), self.g_n, None);
        Ok(Some((mle, tp.mu_hat, tp.degenerate)))
    }

    fn outcome(&self, drift: Option<(f64, f64, bool)>, noise: Option<NoiseEstimate>) -> Outcome {
        let mut values = Vec::new();
        let mut degenerate = Vec::new();
        for e in &self.config.outputs {
            let (v, d) = match (e, drift, noise) {
                (Estimator::MuHat, Some((m, _, _)), _) => (m, false),
                (Estimator::MuTilde, Some((_, t, d)), _) => (t, d),
                (Estimator::HHat, _, Some(NoiseEstimate::One(n))) => (n.h_hat, n.degenerate),
                (Estimator::A2Hat, _, Some(NoiseEstimate::One(n))) => (n.a2_hat, n.degenerate),
                (Estimator::H1Hat, _, Some(NoiseEstimate::Two(n))) => (n.h1_hat, n.degenerate),
                (Estimator::H2Hat, _, Some(NoiseEstimate::Two(n))) => (n.h2_hat, n.degenerate),
                (Estimator::B2Hat, _, Some(NoiseEstimate::Two(n))) => (n.b2_hat, n.degenerate),
                (Estimator::A2Hat, _, Some(NoiseEstimate::Two(n))) => (n.a2_hat, n.degenerate),
                _ => (f64::NAN, true),
            };
            values.push(v);
            degenerate.push(d);
        }
        Outcome { values, degenerate }
    }

    fn theory_sd(&self, e: Estimator) -> Result<Option<f64>> {
        let model = &self.config.model;
        Ok(match e {
            Estimator::MuHat => self.mle.as_ref().map(|m| m.variance().sqrt()),
            Estimator::MuTilde => {
                if self.g_n == 0.0 {
                    None
                } else {
                    let v = two_point_noise_variance(model, self.h, self.n);
                    Some((v / (self.g_n * self.g_n)).sqrt())
                }
            }
            Estimator::HHat | Estimator::A2Hat => match (model, self.config.mode) {
                (NoiseModel::One { hurst, a2 }, SimulationMode::Aggregate)
                    if hurst.value() < 0.75 =>
                {
                    let theta = NifbmParams {
                        hurst: *hurst,
                        h: self.h,
                        a2: *a2,
                    };
                    let s = sigma0_one(&theta)?;
                    let i = usize::from(e == Estimator::A2Hat);
                    Some((s[i][i] / (self.n / 2) as f64).sqrt())
                }
                _ => None,
            },
            _ => None,
        })
    }
}

fn prepare(config: &ExperimentConfig, h: f64, n: usize) -> Result<GridPoint<'_>> {
    let levels: Vec<Aggregation> = if config.wants_noise() {
        config.kind().levels().to_vec()
    } else {
        vec![Aggregation::ONE]
    };
    let mut point = GridPoint {
        config,
        h,
        n,
        levels,
        dg: None,
        dg_levels: Vec::new(),
        g_n: 0.0,
        mle: None,
    };
    if let Some(d) = &config.drift {
        let step = d.step.unwrap_or(h);
        let g = d.function.sample(config.drift_points(n), step)?;
        let dg: Vec<f64> = g.windows(2).map(|w| w[1] - w[0]).collect();
        point.g_n = g[n];
        if config.wants_drift() && config.outputs.contains(&Estimator::MuHat) {
            let cov = autocov_sequence(&config.model, h, Aggregation::ONE, n);
            point.mle = Some(MleDrift::new(cholesky_factor(&cov)?, &dg[..n])?);
        }
        if config.mode == SimulationMode::DirectPerJ {
            let grid = SampleGrid::new(h, dg.len(), Aggregation::ONE)?;
            let base = IncrementSeries::new(grid, dg.clone())?;
            for &j in &point.levels {
                let agg = if j == Aggregation::ONE {
                    base.values.clone()
                } else {
                    aggregate_increments(&base, j)?.values
                };
                point.dg_levels.push(agg[..n].to_vec());
            }
        }
        point.dg = Some(dg);
    }
    Ok(point)
}

fn chunks(replications: usize) -> Vec<std::ops::Range<u64>> {
    let r = replications as u64;
    (0..r.div_ceil(CHUNK))
        .map(|c| c * CHUNK..((c + 1) * CHUNK).min(r))
        .collect()
}

fn run_point(config: &ExperimentConfig, h: f64, n: usize) -> Result<Vec<ResultRow>> {
    let start = Instant::now();
    let point = prepare(config, h, n)?;
    let outcomes: Vec<Outcome> = match config.mode {
        SimulationMode::Aggregate => {
            let grid = SampleGrid::new(h, config.base_len(n), Aggregation::ONE)?;
            let sampler = IncrementSampler::new(&config.model, grid)?;
            chunks(config.replications)
                .into_par_iter()
                .map(|r| {
                    sampler
                        .sample_streams(config.seed, r)
                        .iter()
                        .map(|s| point.evaluate_aggregate(s))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .flatten()
                .collect()
        }
        SimulationMode::DirectPerJ => {
            let sampler = ComponentSampler::new(&config.model, h, n)?;
            chunks(config.replications)
                .into_par_iter()
                .map(|r| {
                    sampler
                        .sample_streams(config.seed, r, &point.levels)
                        .iter()
                        .map(|s| point.evaluate_direct(s))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .flatten()
                .collect()
        }
    };
    let seconds = if config.record_timing {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    };

    let (h1, h2, a2, b2) = match config.model {
        NoiseModel::One { hurst, a2 } => (hurst.value(), None, a2, None),
        NoiseModel::Two(p) => (p.h1.value(), Some(p.h2.value()), p.a2, Some(p.b2)),
    };
    let mut rows = Vec::new();
    for (i, &e) in config.outputs.iter().enumerate() {
        let values: Vec<f64> = outcomes.iter().map(|o| o.values[i]).collect();
        let (mean, sd) = mean_sd(&values);
        rows.push(ResultRow {
            model: config.kind().name().to_string(),
            estimator: e.name().to_string(),
            h1,
            h2,
            a2,
            b2,
            mu: point.mu(),
            h,
            n,
            j_mode: config.mode_name().to_string(),
            replications: config.replications,
            mean,
            sd_emp: sd,
            sd_theory: point.theory_sd(e)?,
            degenerate: outcomes.iter().filter(|o| o.degenerate[i]).count(),
            seconds,
        });
    }
    Ok(rows)
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs every grid point of `config`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for &(h, n) in &config.grid {
        rows.extend(run_point(config, h, n)?);
    }
    Ok(rows)
}

/// Output format of [`write_results`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn json_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

/// Renders rows as CSV (with [`CSV_HEADER`]) or as a JSON array.
pub fn render_results(rows: &[ResultRow], format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for r in rows {
                let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    r.model,
                    r.estimator,
                    fmt_float(r.h1),
                    opt(r.h2),
                    fmt_float(r.a2),
                    opt(r.b2),
                    fmt_float(r.mu),
                    fmt_float(r.h),
                    r.n,
                    r.j_mode,
                    r.replications,
                    fmt_float(r.mean),
                    fmt_float(r.sd_emp),
                    opt(r.sd_theory),
                    r.degenerate,
                    fmt_float(r.seconds),
                );
            }
        }
        Format::Json => {
            out.push('[');
            for (i, r) in rows.iter().enumerate() {
                let opt = |v: Option<f64>| v.map_or("null".to_string(), json_float);
                let s = |v: &str| serde_json::to_string(v).expect("string serialization");
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(
                    out,
                    "\n  {{\"model\":{},\"estimator\":{},\"H1\":{},\"H2\":{},\"a2\":{},\"b2\":{},\
                     \"mu\":{},\"h\":{},\"N\":{},\"j_mode\":{},\"replications\":{},\"mean\":{},\
                     \"sd_emp\":{},\"sd_theory\":{},\"degenerate\":{},\"seconds\":{}}}",
                    s(&r.model),
                    s(&r.estimator),
                    json_float(r.h1),
                    opt(r.h2),
                    json_float(r.a2),
                    opt(r.b2),
                    json_float(r.mu),
                    json_float(r.h),
                    r.n,
                    s(&r.j_mode),
                    r.replications,
                    json_float(r.mean),
                    json_float(r.sd_emp),
                    opt(r.sd_theory),
                    r.degenerate,
                    json_float(r.seconds),
                );
            }
            out.push_str(if rows.is_empty() { "]\n" } else { "\n]\n" });
        }
    }
    out
}

/// Writes rows to `path`.
pub fn write_results(rows: &[ResultRow], path: &Path, format: Format) -> Result<()> {
    std::fs::write(path, render_results(rows, format)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Hurst pairs of the two-component suites, smaller index first.
pub const SUITE_PAIRS: [(f64, f64); 5] =
    [(0.1, 0.3), (0.1, 0.5), (0.3, 0.5), (0.3, 0.7), (0.5, 0.7)];

/// Built-in benchmark suites:
///
/// 1. drift estimators, one process, `H ∈ {0.1, …, 0.9}`;
/// 2. drift estimators, two processes;
/// 3. one-process noise estimators on aggregated paths;
/// 4. two-process noise estimators, `a² = b² = 4`.
///
/// Suites 1 and 2 sample the drift `4·G` on unit time steps, independent of `h`.
pub fn builtin_suite(which: u8, replications: usize, seed: u64) -> Result<Vec<ExperimentConfig>> {
    let drift = Some(DriftConfig {
        mu: 4.0,
        function: DriftFunction::Benchmark,
        step: Some(1.0),
    });
    let cross = |hs: &[f64], ns: &[usize]| -> Vec<(f64, usize)> {
        hs.iter()
            .flat_map(|&h| ns.iter().map(move |&n| (h, n)))
            .collect()
    };
    let base = |model: NoiseModel| ExperimentConfig {
        model,
        drift: None,
        grid: Vec::new(),
        replications,
        seed,
        mode: SimulationMode::DirectPerJ,
        outputs: Vec::new(),
        record_timing: false,
    };
    let one = |h: f64, a2: f64| -> Result<NoiseModel> {
        Ok(NoiseModel::One {
            hurst: HurstIndex::new(h)?,
            a2,
        })
    };
    let two = |(h1, h2): (f64, f64), s: f64| -> Result<NoiseModel> {
        Ok(NoiseModel::Two(MixedParams::from_pairs((h1, s), (h2, s))?))
    };
    let configs = match which {
        1 => [0.1, 0.3, 0.5, 0.7, 0.9]
            .iter()
            .map(|&h| {
                Ok(ExperimentConfig {
                    drift: drift.clone(),
                    grid: cross(&[2.0, 4.0], &[8, 32, 128]),
                    outputs: vec![Estimator::MuHat, Estimator::MuTilde],
                    ..base(one(h, 1.0)?)
                })
            })
            .collect::<Result<Vec<_>>>()?,
        2 => SUITE_PAIRS
            .iter()
            .map(|&p| {
                Ok(ExperimentConfig {
                    drift: drift.clone(),
                    grid: cross(&[2.0, 4.0], &[8, 32, 128]),
                    outputs: vec![Estimator::MuHat, Estimator::MuTilde],
                    ..base(two(p, 1.0)?)
                })
            })
            .collect::<Result<Vec<_>>>()?,
        3 => [0.1, 0.3, 0.5, 0.7]
            .iter()
            .map(|&h| {
                Ok(ExperimentConfig {
                    grid: cross(&[2.0, 4.0, 16.0], &[64, 256, 1024, 4096]),
                    mode: SimulationMode::Aggregate,
                    outputs: vec![Estimator::HHat, Estimator::A2Hat],
                    ..base(one(h, 1.0)?)
                })
            })
            .collect::<Result<Vec<_>>>()?,
        4 => SUITE_PAIRS
            .iter()
            .map(|&p| {
                Ok(ExperimentConfig {
                    grid: cross(&[2.0, 4.0, 16.0], &[64, 256, 1024, 4096]),
                    outputs: vec![
                        Estimator::H1Hat,
                        Estimator::H2Hat,
                        Estimator::A2Hat,
                        Estimator::B2Hat,
                    ],
                    ..base(two(p, 4.0)?)
                })
            })
            .collect::<Result<Vec<_>>>()?,
        _ => {
            return Err(Error::Config(format!(
                "no built-in suite {which}; choose 1-4"
            )))
        }
    };
    for c in &configs {
        c.validate()?;
    }
    Ok(configs)
}
