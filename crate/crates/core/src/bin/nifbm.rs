use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nifbm::asymptotics::{sigma_tilde_one, sigma_tilde_one_as_displayed};
use nifbm::covariance::{find_h0, gamma, Aggregation, HurstIndex, MixedParams, NoiseModel};
use nifbm::estimation::{estimate_noise, shared_horizon_xi, ModelKind};
use nifbm::harness::{builtin_suite, render_results, run_experiment, ExperimentConfig, Format};
use nifbm::simulation::{sample_increments, IncrementSeries, RngSeed, SampleGrid};
use nifbm::{Error, Result};

/// Directory for relative `--out` paths when set.
const OUTPUT_DIR_VAR: &str = "NIFBM_OUTPUT_DIR";

#[derive(Parser)]
#[command(
    name = "nifbm",
    version,
    about = "Simulation and estimation for nifBm noise models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print one increment series, one value per line.
    Simulate {
        #[arg(long, default_value = "one-nifbm")]
        model: String,
        /// Hurst index (first component for two-nifbm).
        #[arg(long = "H")]
        hurst: f64,
        /// Second Hurst index (two-nifbm only).
        #[arg(long = "H2")]
        hurst2: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        a2: f64,
        #[arg(long)]
        b2: Option<f64>,
        #[arg(long)]
        h: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        /// Aggregation level: 1, 2, 4 or 8.
        #[arg(long, default_value_t = 1)]
        j: u32,
    },
    /// Estimate noise parameters from width-h increments read on stdin.
    Estimate {
        #[arg(long)]
        model: String,
        #[arg(long)]
        h: f64,
    },
    /// Run a Monte Carlo experiment from a TOML config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: OutFormat,
        /// Record wall time per grid point.
        #[arg(long)]
        timing: bool,
    },
    /// Run a built-in benchmark suite (1-4).
    Tables {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        which: u8,
        #[arg(long, default_value_t = 100)]
        replications: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: OutFormat,
    },
    /// Print γ(H, n) for n = 0..=max-lag, H0 and the ξ covariance entries.
    Constants {
        #[arg(long = "H")]
        hurst: f64,
        #[arg(long, default_value_t = 8)]
        max_lag: u64,
        #[arg(long, default_value_t = 1.0)]
        h: f64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn noise_model(
    model: &str,
    hurst: f64,
    hurst2: Option<f64>,
    a2: f64,
    b2: Option<f64>,
) -> Result<NoiseModel> {
    match ModelKind::parse(model)? {
        ModelKind::OneNifbm => Ok(NoiseModel::One {
            hurst: HurstIndex::new(hurst)?,
            a2,
        }),
        ModelKind::TwoNifbm => {
            let h2 = hurst2.ok_or_else(|| Error::Config("two-nifbm needs --H2".into()))?;
            let b2 = b2.ok_or_else(|| Error::Config("two-nifbm needs --b2".into()))?;
            Ok(NoiseModel::Two(MixedParams::from_pairs(
                (hurst, a2),
                (h2, b2),
            )?))
        }
    }
}

fn out_path(path: PathBuf) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_VAR) {
        Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
        _ => path,
    }
}

fn emit(text: &str, out: Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => {
            let path = out_path(path);
            std::fs::write(&path, text).map_err(|source| Error::Io { path, source })
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(|source| Error::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

fn read_series(h: f64) -> Result<IncrementSeries> {
    let mut values = Vec::new();
    for (i, line) in io::stdin().lock().lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: "<stdin>".into(),
            source,
        })?;
        // Last column of each row; a non-numeric first line is a header.
        let field = line.rsplit(',').next().unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if i == 0 => {}
            Err(_) => {
                return Err(Error::Parse(format!(
                    "line {}: `{field}` is not a number",
                    i + 1
                )))
            }
        }
    }
    let grid = SampleGrid::new(h, values.len(), Aggregation::ONE)?;
    IncrementSeries::new(grid, values)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate {
            model,
            hurst,
            hurst2,
            a2,
            b2,
            h,
            n,
            seed,
            stream,
            j,
        } => {
            let model = noise_model(&model, hurst, hurst2, a2, b2)?;
            let grid = SampleGrid::new(h, n, Aggregation::new(j)?)?;
            let series = sample_increments(&model, grid, RngSeed::new(seed, stream))?;
            let mut text = String::from("increment\n");
            for v in &series.values {
                text.push_str(&format!("{v:.16e}\n"));
            }
            emit(&text, None)
        }
        Command::Estimate { model, h } => {
            let kind = ModelKind::parse(&model)?;
            let series = read_series(h)?;
            let xi = shared_horizon_xi(&series, kind.levels())?;
            let est = estimate_noise(&xi, h, kind)?;
            let json =
                serde_json::to_string_pretty(&est).map_err(|e| Error::Parse(e.to_string()))?;
            emit(&format!("{json}\n"), None)
        }
        Command::Experiment {
            config,
            out,
            format,
            timing,
        } => {
            let mut config = ExperimentConfig::from_file(&config)?;
            config.record_timing |= timing;
            let rows = run_experiment(&config)?;
            emit(&render_results(&rows, format.into()), out)
        }
        Command::Tables {
            which,
            replications,
            seed,
            out,
            format,
        } => {
            let mut rows = Vec::new();
            for config in builtin_suite(which, replications, seed)? {
                rows.extend(run_experiment(&config)?);
            }
            emit(&render_results(&rows, format.into()), out)
        }
        Command::Constants { hurst, max_lag, h } => {
            let hi = HurstIndex::new(hurst)?;
            let mut text = String::from("n,gamma\n");
            for n in 0..=max_lag {
                text.push_str(&format!("{n},{:.16e}\n", gamma(hi, n)));
            }
            text.push_str(&format!("H0,{:.16e}\n", find_h0()));
            if hurst < 0.75 {
                let s = sigma_tilde_one(hi, h)?;
                text.push_str(&format!(
                    "s11,{:.16e}\ns12,{:.16e}\ns22,{:.16e}\n",
                    s.s11, s.s12, s.s22
                ));
                let d = sigma_tilde_one_as_displayed(hi, h)?;
                text.push_str(&format!("s12_unhalved,{:.16e}\n", d.s12));
            } else {
                text.push_str("s11,\ns12,\ns22,\n");
            }
            emit(&text, None)
        }
    }
}
