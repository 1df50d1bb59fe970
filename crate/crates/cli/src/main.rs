//! `rankbench`: characterize meta-datasets, aggregate rankings, simulate
//! omissions and run leave-one-out experiments.

mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rankbench::evaluation::write_curves_csv;
use rankbench::{
    apply_omission, characterize, generate_synthetic, rankings_of, run_loo, ExperimentConfig,
    Method, MilConfig, OmissionMode, OmissionSpec, PerformanceMatrix, SyntheticSpec, TimeScale,
};
use serde::Serialize;
use serde_json::json;
use std::io::Write as _;

use crate::output::{sha256_file, Staged};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Input(#[from] rankbench::Error),
    #[error("{0}")]
    Usage(String),
    #[error("writing {path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl CliError {
    pub fn output(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Output {
            path: path.to_owned(),
            message: e.to_string(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Usage(_) => 2,
            CliError::Output { .. } => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output {
            path: PathBuf::new(),
            message: e.to_string(),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "rankbench",
    version,
    about = "Average ranking of algorithms from incomplete meta-data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Histogram and summary of pairwise Spearman correlations between datasets.
    Characterize {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        bin_width: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate the per-dataset rankings of a matrix into one ranking.
    Aggregate {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value = "ar-mta")]
        method: Method,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply one omission draw to a matrix and write the degraded matrix.
    Simulate {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        mode: OmissionMode,
        #[arg(long)]
        percent: f64,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Leave-one-out experiment over an omission grid.
    Experiment {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "mtd,mta")]
        mode: Vec<OmissionMode>,
        #[arg(long, value_delimiter = ',', default_value = "0,5,10,20,50,90,95")]
        percents: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        mil: MilArgs,
        #[arg(long, value_delimiter = ',', default_value = "ar,ar-mta")]
        method: Vec<Method>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic meta-dataset.
    Generate {
        #[arg(long, default_value_t = 53)]
        algorithms: usize,
        #[arg(long, default_value_t = 39)]
        datasets: usize,
        /// Mean pairwise Spearman to calibrate the noise for.
        #[arg(long, default_value_t = 0.51)]
        target_spearman: f64,
        /// Fixed noise scale; skips calibration.
        #[arg(long)]
        noise: Option<f64>,
        /// Runtime range in log10 seconds.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        runtime_log_min: f64,
        #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
        runtime_log_max: f64,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct SeedArg {
    #[arg(long = "seed", env = "RANKBENCH_SEED", default_value_t = 0)]
    value: u64,
}

#[derive(Args, Debug)]
struct MilArgs {
    #[arg(long, default_value_t = 10.0)]
    tmin: f64,
    #[arg(long, default_value_t = 1e4)]
    tmax: f64,
    #[arg(long, default_value = "linear")]
    time_scale: TimeScale,
}

/// Inputs, parameters and output checksums of one run.
#[derive(Debug, Serialize)]
struct RunManifest {
    command: &'static str,
    input_paths: Vec<String>,
    input_checksums: BTreeMap<String, String>,
    parameters: serde_json::Value,
    output_checksums: BTreeMap<String, String>,
    version: &'static str,
}

impl RunManifest {
    fn new(
        command: &'static str,
        inputs: &[&Path],
        parameters: serde_json::Value,
    ) -> Result<Self, CliError> {
        let mut input_checksums = BTreeMap::new();
        for p in inputs {
            let sum = sha256_file(p).map_err(|source| rankbench::Error::Io {
                path: p.to_path_buf(),
                source,
            })?;
            input_checksums.insert(p.display().to_string(), sum);
        }
        Ok(Self {
            command,
            input_paths: inputs.iter().map(|p| p.display().to_string()).collect(),
            input_checksums,
            parameters,
            output_checksums: BTreeMap::new(),
            version: env!("CARGO_PKG_VERSION"),
        })
    }

    /// Records checksums of everything staged so far and stages the manifest.
    fn finish(mut self, staged: &mut Staged, dir: &Path) -> Result<(), CliError> {
        self.output_checksums = staged.checksums()?.into_iter().collect();
        staged.write(&dir.join("manifest.json"), |w| {
            serde_json::to_writer_pretty(&mut *w, &self).map_err(rankbench::Error::from)?;
            writeln!(w).map_err(|e| CliError::output(dir, e))
        })
    }
}

fn load(path: &Path) -> Result<PerformanceMatrix, CliError> {
    Ok(PerformanceMatrix::load_csv(path)?)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Characterize {
            matrix,
            bin_width,
            out,
        } => {
            let m = load(&matrix)?;
            let c = characterize(&m, bin_width)?;
            let mut staged = Staged::in_dir(&out)?;
            staged.write(&out.join("histogram.csv"), |w| c.write_histogram_csv(w))?;
            staged.write(&out.join("summary.json"), |w| c.write_summary_json(w))?;
            RunManifest::new(
                "characterize",
                &[&matrix],
                json!({ "bin_width": bin_width }),
            )?
            .finish(&mut staged, &out)?;
            staged.commit()?;
        }
        Command::Aggregate {
            matrix,
            method,
            out,
        } => {
            let m = load(&matrix)?;
            let rankings = rankings_of(&m);
            let agg = method.aggregate(&rankings, m.n_algorithms())?;
            let mut staged = Staged::new();
            staged.write(&out, |w| agg.write_csv(w))?;
            staged.commit()?;
        }
        Command::Simulate {
            matrix,
            mode,
            percent,
            seed,
            out,
        } => {
            let m = load(&matrix)?;
            let spec = OmissionSpec::new(mode, percent, seed.value)?;
            let degraded = apply_omission(&m, &spec)?;
            let mut staged = Staged::new();
            staged.write(&out, |w| degraded.write_csv(w))?;
            staged.commit()?;
        }
        Command::Experiment {
            matrix,
            mode,
            percents,
            repeats,
            seed,
            mil,
            method,
            out,
        } => {
            let m = load(&matrix)?;
            let cfg = ExperimentConfig {
                methods: dedup(method),
                modes: dedup(mode),
                percents,
                repeats,
                mil: MilConfig::new(mil.tmin, mil.tmax, mil.time_scale)?,
                master_seed: seed.value,
            };
            let outcome = run_loo(&m, &cfg)?;
            let mut staged = Staged::in_dir(&out)?;
            staged.write(&out.join("mil_report.csv"), |w| outcome.report.write_csv(w))?;
            staged.write(&out.join("mil_report.json"), |w| {
                outcome.report.write_json(w)
            })?;
            staged.write(&out.join("curves.csv"), |w| {
                write_curves_csv(&outcome.curves, w)
            })?;
            let params = serde_json::to_value(&cfg).map_err(rankbench::Error::from)?;
            RunManifest::new("experiment", &[&matrix], params)?.finish(&mut staged, &out)?;
            staged.commit()?;
        }
        Command::Generate {
            algorithms,
            datasets,
            target_spearman,
            noise,
            runtime_log_min,
            runtime_log_max,
            seed,
            out,
        } => {
            let mut spec = SyntheticSpec {
                n_algorithms: algorithms,
                n_datasets: datasets,
                target_mean_spearman: target_spearman,
                noise_scale: noise.unwrap_or(0.0),
                runtime_log_range: (runtime_log_min, runtime_log_max),
                seed: seed.value,
            };
            if noise.is_none() {
                spec.noise_scale = rankbench::calibrate_noise_scale(&spec)?;
            }
            let m: PerformanceMatrix = generate_synthetic(&spec)?;
            let mut staged = Staged::new();
            staged.write(&out, |w| m.write_csv(w))?;
            staged.commit()?;
            eprintln!("noise_scale = {}", spec.noise_scale);
        }
    }
    Ok(())
}

fn dedup<T: Ord>(mut v: Vec<T>) -> Vec<T> {
    v.sort();
    v.dedup();
    v
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rankbench: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
