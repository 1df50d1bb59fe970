use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::curve::{
    aggregate_curves, build_loss_time_curve, mean_interval_loss, LossTimeCurve, MilConfig,
};
use crate::aggregation::{aggregate_baseline_ar, aggregate_incremental, AggregateRanking};
use crate::error::{Error, Result};
use crate::meta_data::PerformanceMatrix;
use crate::omission::{apply_omission, OmissionMode, OmissionSpec};
use crate::ranking::{rankings_of, Ranking};
use crate::scalar::Scalar;

/// Aggregation method under evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "AR")]
    Ar,
    #[serde(rename = "AR-MTA")]
    ArMta,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ar => "AR",
            Method::ArMta => "AR-MTA",
        }
    }

    pub fn aggregate<T: Scalar>(
        self,
        rankings: &[Ranking<T>],
        n_max: usize,
    ) -> Result<AggregateRanking<T>> {
        match self {
            Method::Ar => aggregate_baseline_ar(rankings),
            Method::ArMta => aggregate_incremental(rankings, n_max),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ar" => Ok(Method::Ar),
            "ar-mta" | "ar_mta" | "armta" => Ok(Method::ArMta),
            other => Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig<T> {
    pub methods: Vec<Method>,
    pub modes: Vec<OmissionMode>,
    pub percents: Vec<f64>,
    pub repeats: usize,
    pub mil: MilConfig<T>,
    pub master_seed: u64,
}

impl<T: Scalar> Default for ExperimentConfig<T> {
    fn default() -> Self {
        Self {
            methods: vec![Method::Ar, Method::ArMta],
            modes: vec![OmissionMode::Mtd, OmissionMode::Mta],
            percents: vec![0.0, 5.0, 10.0, 20.0, 50.0, 90.0, 95.0],
            repeats: 10,
            mil: MilConfig::default(),
            master_seed: 0,
        }
    }
}

impl<T: Scalar> ExperimentConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.mil.validate()?;
        if self.methods.is_empty() || self.modes.is_empty() || self.percents.is_empty() {
            return Err(Error::InvalidConfig(
                "methods, modes and percents must be non-empty".into(),
            ));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidConfig("repeats must be positive".into()));
        }
        for &p in &self.percents {
            OmissionSpec::new(OmissionMode::Mta, p, 0)?;
        }
        Ok(())
    }
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one omission draw.
///
/// Chains SplitMix64 over `master`, then the mode index, fold index, percent
/// index and repetition index: `h ← splitmix64(h ⊕ splitmix64(k))` for each
/// counter `k` in that order.
pub fn derive_seed(
    master: u64,
    mode: usize,
    fold: usize,
    percent: usize,
    repetition: usize,
) -> u64 {
    [mode, fold, percent, repetition]
        .into_iter()
        .fold(splitmix64(master), |h, k| {
            splitmix64(h ^ splitmix64(k as u64))
        })
}

/// One row of the report: a method under one omission setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilCell<T> {
    pub method: Method,
    pub mode: OmissionMode,
    pub percent: f64,
    /// Mean of `per_fold_mils`.
    pub mean_mil: T,
    /// MIL of each fold's repetition-averaged curve.
    pub per_fold_mils: Vec<T>,
    /// Held-out dataset of each entry of `per_fold_mils`.
    pub fold_datasets: Vec<String>,
    /// MIL of every non-skipped repetition, per fold.
    pub per_repetition_mils: Vec<Vec<T>>,
    pub n_folds: usize,
    /// Repetitions skipped because the degraded training data had no results.
    pub n_skipped: usize,
}

/// Setting in which every repetition of every fold was skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmptyCell {
    pub method: Method,
    pub mode: OmissionMode,
    pub percent: f64,
    pub n_skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilReport<T> {
    pub t_min: T,
    pub t_max: T,
    pub time_scale: super::TimeScale,
    pub repeats: usize,
    pub master_seed: u64,
    /// Datasets left out of the folds because they have no results.
    pub unusable_folds: Vec<String>,
    pub cells: Vec<MilCell<T>>,
    pub empty_cells: Vec<EmptyCell>,
}

impl<T: Scalar> MilReport<T> {
    pub fn cell(&self, method: Method, mode: OmissionMode, percent: f64) -> Option<&MilCell<T>> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.mode == mode && c.percent == percent)
    }

    /// CSV `method,mode,percent,mean_mil,n_folds,n_skipped`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record([
            "method",
            "mode",
            "percent",
            "mean_mil",
            "n_folds",
            "n_skipped",
        ])?;
        for c in &self.cells {
            wtr.write_record([
                c.method.name().to_owned(),
                c.mode.to_string(),
                c.percent.to_string(),
                c.mean_mil.to_string(),
                c.n_folds.to_string(),
                c.n_skipped.to_string(),
            ])?;
        }
        wtr.flush().map_err(|source| Error::Io {
            path: Default::default(),
            source,
        })?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }
}

/// Repetition-averaged curve of one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldCurve<T> {
    pub method: Method,
    pub mode: OmissionMode,
    pub percent: f64,
    pub dataset: String,
    pub curve: LossTimeCurve<T>,
}

/// Writes curves as CSV `method,mode,percent,fold,time,loss`, with the
/// initial loss at time 0.
pub fn write_curves_csv<T: Scalar, W: Write>(curves: &[FoldCurve<T>], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["method", "mode", "percent", "fold", "time", "loss"])?;
    for fc in curves {
        let head = [
            fc.method.name().to_owned(),
            fc.mode.to_string(),
            fc.percent.to_string(),
            fc.dataset.clone(),
        ];
        let points = std::iter::once((T::zero(), fc.curve.initial_loss()))
            .chain(fc.curve.breakpoints().iter().map(|b| (b.time, b.loss)));
        for (t, l) in points {
            let mut row = head.to_vec();
            row.push(t.to_string());
            row.push(l.to_string());
            wtr.write_record(row)?;
        }
    }
    wtr.flush().map_err(|source| Error::Io {
        path: Default::default(),
        source,
    })?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LooOutcome<T> {
    pub report: MilReport<T>,
    pub curves: Vec<FoldCurve<T>>,
}

impl<T: Scalar> LooOutcome<T> {
    pub fn write_curves_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_curves_csv(&self.curves, writer)
    }
}

/// Indexed by setting (mode, percent), then method, then repetition; `None` marks a skip.
type FoldResult<T> = Vec<Vec<Vec<Option<LossTimeCurve<T>>>>>;

/// Top-N order: aggregated total order, then never-ranked algorithms by id.
fn top_n_order<T: Scalar>(agg: &AggregateRanking<T>, algorithms: &[String]) -> Vec<String> {
    let mut order = agg.order();
    order.extend(algorithms.iter().filter(|a| agg.get(a).is_none()).cloned());
    order
}

fn run_fold<T: Scalar>(
    matrix: &PerformanceMatrix<T>,
    fold: usize,
    cfg: &ExperimentConfig<T>,
) -> Result<FoldResult<T>> {
    let heldout = &matrix.datasets()[fold];
    let training = matrix.without_dataset(fold);
    let n_max = matrix.n_algorithms();
    let mut out = Vec::with_capacity(cfg.modes.len() * cfg.percents.len());
    for (mi, &mode) in cfg.modes.iter().enumerate() {
        for (pi, &percent) in cfg.percents.iter().enumerate() {
            let mut per_method = vec![Vec::with_capacity(cfg.repeats); cfg.methods.len()];
            for rep in 0..cfg.repeats {
                let seed = derive_seed(cfg.master_seed, mi, fold, pi, rep);
                let degraded = apply_omission(
                    &training,
                    &OmissionSpec {
                        mode,
                        percent,
                        seed,
                    },
                )?;
                let rankings = rankings_of(&degraded);
                for (k, &method) in cfg.methods.iter().enumerate() {
                    let curve = if rankings.is_empty() {
                        None
                    } else {
                        let agg = method.aggregate(&rankings, n_max)?;
                        let order = top_n_order(&agg, matrix.algorithms());
                        Some(build_loss_time_curve(&order, matrix, heldout)?)
                    };
                    per_method[k].push(curve);
                }
            }
            out.push(per_method);
        }
    }
    Ok(out)
}

/// Leave-one-out evaluation over the configured omission grid, returning the
/// report together with every fold's repetition-averaged curve.
///
/// Each fold holds one dataset out; the remaining datasets are degraded with
/// a seed from [`derive_seed`], ranked, aggregated by each method, and the
/// aggregate order is walked on the held-out dataset. A fold's repetition
/// curves are averaged before its MIL is taken. Folds run in parallel; the
/// result does not depend on scheduling.
pub fn run_loo<T: Scalar>(
    matrix: &PerformanceMatrix<T>,
    cfg: &ExperimentConfig<T>,
) -> Result<LooOutcome<T>> {
    cfg.validate()?;
    if matrix.n_datasets() < 2 {
        return Err(Error::InvalidConfig(
            "leave-one-out needs at least 2 datasets".into(),
        ));
    }
    if matrix.n_algorithms() < 2 {
        return Err(Error::InvalidConfig("need at least 2 algorithms".into()));
    }
    let (folds, unusable): (Vec<usize>, Vec<usize>) =
        (0..matrix.n_datasets()).partition(|&d| matrix.present_in_dataset(d) > 0);
    let results: Vec<FoldResult<T>> = folds
        .par_iter()
        .map(|&fold| run_fold(matrix, fold, cfg))
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    let mut empty_cells = Vec::new();
    let mut curves = Vec::new();
    for (mi, &mode) in cfg.modes.iter().enumerate() {
        for (pi, &percent) in cfg.percents.iter().enumerate() {
            let setting = mi * cfg.percents.len() + pi;
            for (k, &method) in cfg.methods.iter().enumerate() {
                let mut per_fold_mils = Vec::new();
                let mut fold_datasets = Vec::new();
                let mut per_repetition_mils = Vec::new();
                let mut n_skipped = 0;
                for (fi, &fold) in folds.iter().enumerate() {
                    let reps = &results[fi][setting][k];
                    let done: Vec<LossTimeCurve<T>> = reps.iter().flatten().cloned().collect();
                    n_skipped += reps.len() - done.len();
                    if done.is_empty() {
                        continue;
                    }
                    per_repetition_mils.push(
                        done.iter()
                            .map(|c| mean_interval_loss(c, &cfg.mil))
                            .collect::<Result<Vec<_>>>()?,
                    );
                    let mean_curve = aggregate_curves(&done)?;
                    per_fold_mils.push(mean_interval_loss(&mean_curve, &cfg.mil)?);
                    let dataset = matrix.datasets()[fold].clone();
                    fold_datasets.push(dataset.clone());
                    curves.push(FoldCurve {
                        method,
                        mode,
                        percent,
                        dataset,
                        curve: mean_curve,
                    });
                }
                if per_fold_mils.is_empty() {
                    empty_cells.push(EmptyCell {
                        method,
                        mode,
                        percent,
                        n_skipped,
                    });
                    continue;
                }
                let mean_mil =
                    per_fold_mils.iter().copied().sum::<T>() / T::from_count(per_fold_mils.len());
                cells.push(MilCell {
                    method,
                    mode,
                    percent,
                    mean_mil,
                    n_folds: per_fold_mils.len(),
                    per_fold_mils,
                    fold_datasets,
                    per_repetition_mils,
                    n_skipped,
                });
            }
        }
    }
    Ok(LooOutcome {
        report: MilReport {
            t_min: cfg.mil.t_min,
            t_max: cfg.mil.t_max,
            time_scale: cfg.mil.time_scale,
            repeats: cfg.repeats,
            master_seed: cfg.master_seed,
            unusable_folds: unusable
                .into_iter()
                .map(|d| matrix.datasets()[d].clone())
                .collect(),
            cells,
            empty_cells,
        },
        curves,
    })
}

/// [`run_loo`] without the curves.
pub fn loo_experiment<T: Scalar>(
    matrix: &PerformanceMatrix<T>,
    cfg: &ExperimentConfig<T>,
) -> Result<MilReport<T>> {
    Ok(run_loo(matrix, cfg)?.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meta_data::{generate_synthetic, SyntheticSpec};

    fn small() -> PerformanceMatrix<f64> {
        generate_synthetic(&SyntheticSpec {
            n_algorithms: 8,
            n_datasets: 6,
            noise_scale: 0.8,
            ..Default::default()
        })
        .unwrap()
    }

    fn cfg(percents: Vec<f64>) -> ExperimentConfig<f64> {
        ExperimentConfig {
            percents,
            repeats: 3,
            ..Default::default()
        }
    }

    #[test]
    fn seeds_differ_per_counter() {
        let base = derive_seed(1, 0, 0, 0, 0);
        assert_ne!(base, derive_seed(2, 0, 0, 0, 0));
        assert_ne!(base, derive_seed(1, 1, 0, 0, 0));
        assert_ne!(base, derive_seed(1, 0, 1, 0, 0));
        assert_ne!(base, derive_seed(1, 0, 0, 1, 0));
        assert_ne!(base, derive_seed(1, 0, 0, 0, 1));
        assert_ne!(derive_seed(1, 0, 1, 0, 0), derive_seed(1, 0, 0, 1, 0));
        assert_eq!(base, derive_seed(1, 0, 0, 0, 0));
    }

    #[test]
    fn report_shape() {
        let out = run_loo(&small(), &cfg(vec![0.0, 50.0])).unwrap();
        assert_eq!(out.report.cells.len(), 2 * 2 * 2);
        for c in &out.report.cells {
            assert_eq!(c.n_folds, 6);
            assert_eq!(c.per_fold_mils.len(), 6);
            assert_eq!(
                c.per_repetition_mils.iter().map(Vec::len).sum::<usize>(),
                18
            );
            let mean = c.per_fold_mils.iter().sum::<f64>() / 6.0;
            assert_eq!(c.mean_mil, mean);
            assert_eq!(c.n_skipped, 0);
        }
        assert_eq!(out.curves.len(), 8 * 6);
    }

    #[test]
    fn zero_percent_methods_agree() {
        let r = loo_experiment(&small(), &cfg(vec![0.0])).unwrap();
        for mode in [OmissionMode::Mtd, OmissionMode::Mta] {
            let ar = r.cell(Method::Ar, mode, 0.0).unwrap();
            let mta = r.cell(Method::ArMta, mode, 0.0).unwrap();
            assert_eq!(ar.per_fold_mils, mta.per_fold_mils);
        }
    }

    #[test]
    fn full_omission_is_skipped_not_fatal() {
        let r = loo_experiment(&small(), &cfg(vec![100.0])).unwrap();
        assert!(r.cells.is_empty());
        assert_eq!(r.empty_cells.len(), 4);
        assert!(r.empty_cells.iter().all(|e| e.n_skipped == 6 * 3));
    }

    #[test]
    fn unusable_folds_listed() {
        let mut m = small();
        m.clear_dataset(2);
        let r = loo_experiment(&m, &cfg(vec![0.0])).unwrap();
        assert_eq!(r.unusable_folds, ["d3"]);
        assert!(r.cells.iter().all(|c| c.n_folds == 5));
    }

    #[test]
    fn rejects_bad_config() {
        let m = small();
        assert!(loo_experiment(
            &m,
            &ExperimentConfig {
                repeats: 0,
                ..cfg(vec![0.0])
            }
        )
        .is_err());
        assert!(loo_experiment(&m, &cfg(vec![120.0])).is_err());
        assert!(loo_experiment(&m, &cfg(vec![])).is_err());
        let one = m
            .without_dataset(0)
            .without_dataset(0)
            .without_dataset(0)
            .without_dataset(0)
            .without_dataset(0);
        assert!(loo_experiment(&one, &cfg(vec![0.0])).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in [Method::Ar, Method::ArMta] {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
    }
}
