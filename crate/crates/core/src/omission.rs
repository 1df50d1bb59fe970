//! Simulated omissions: whole datasets (MTD) or a fixed share of the tests
//! on every dataset (MTA).

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meta_data::PerformanceMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OmissionMode {
    /// Missing tests on datasets: every result of a share of datasets is dropped.
    Mtd,
    /// Missing tests of algorithms: a share of the results on each dataset is dropped.
    Mta,
}

impl OmissionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            OmissionMode::Mtd => "mtd",
            OmissionMode::Mta => "mta",
        }
    }
}

impl fmt::Display for OmissionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OmissionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mtd" => Ok(OmissionMode::Mtd),
            "mta" => Ok(OmissionMode::Mta),
            other => Err(Error::InvalidConfig(format!(
                "unknown omission mode {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmissionSpec {
    pub mode: OmissionMode,
    /// Share of results to omit, in percent.
    pub percent: f64,
    pub seed: u64,
}

impl OmissionSpec {
    pub fn new(mode: OmissionMode, percent: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            mode,
            percent,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=100.0).contains(&self.percent) {
            return Err(Error::InvalidConfig(format!(
                "omission percent {} outside [0, 100]",
                self.percent
            )));
        }
        Ok(())
    }
}

/// Number of items kept out of `total` when `percent` are omitted:
/// `total · (100 − percent) / 100`, rounded half to even.
pub fn kept_count(total: usize, percent: f64) -> usize {
    let kept = (total as f64) * (100.0 - percent) / 100.0;
    (kept.round_ties_even().max(0.0) as usize).min(total)
}

/// Empties all cells of a random subset of datasets; the rest are untouched.
pub fn apply_mtd<T: Scalar>(
    matrix: &PerformanceMatrix<T>,
    spec: &OmissionSpec,
) -> Result<PerformanceMatrix<T>> {
    expect_mode(spec, OmissionMode::Mtd)?;
    let total = matrix.n_datasets();
    let keep = kept_count(total, spec.percent);
    let mut out = matrix.clone();
    if keep == total {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut kept = vec![false; total];
    for d in index::sample(&mut rng, total, keep) {
        kept[d] = true;
    }
    for (d, _) in kept.iter().enumerate().filter(|(_, k)| !**k) {
        out.clear_dataset(d);
    }
    Ok(out)
}

/// On every dataset, keeps a uniformly drawn subset of its present cells of
/// size [`kept_count`]; datasets are processed in order from one seeded stream.
pub fn apply_mta<T: Scalar>(
    matrix: &PerformanceMatrix<T>,
    spec: &OmissionSpec,
) -> Result<PerformanceMatrix<T>> {
    expect_mode(spec, OmissionMode::Mta)?;
    let mut out = matrix.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for d in 0..matrix.n_datasets() {
        let present: Vec<usize> = matrix.column(d).map(|(a, _)| a).collect();
        let keep = kept_count(present.len(), spec.percent);
        if keep == present.len() {
            continue;
        }
        let mut kept = vec![false; present.len()];
        for i in index::sample(&mut rng, present.len(), keep) {
            kept[i] = true;
        }
        for (&a, _) in present.iter().zip(&kept).filter(|(_, k)| !**k) {
            out.remove_cell(d, a);
        }
    }
    Ok(out)
}

/// Dispatches on `spec.mode`.
pub fn apply_omission<T: Scalar>(
    matrix: &PerformanceMatrix<T>,
    spec: &OmissionSpec,
) -> Result<PerformanceMatrix<T>> {
    match spec.mode {
        OmissionMode::Mtd => apply_mtd(matrix, spec),
        OmissionMode::Mta => apply_mta(matrix, spec),
    }
}

fn expect_mode(spec: &OmissionSpec, mode: OmissionMode) -> Result<()> {
    spec.validate()?;
    if spec.mode != mode {
        return Err(Error::InvalidConfig(format!(
            "expected {mode} omission spec, got {}",
            spec.mode
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meta_data::{generate_synthetic, SyntheticSpec};

    fn synthetic(n_algorithms: usize, n_datasets: usize) -> PerformanceMatrix<f64> {
        generate_synthetic(&SyntheticSpec {
            n_algorithms,
            n_datasets,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn kept_counts() {
        let datasets: Vec<_> = [0.0, 5.0, 10.0, 20.0, 50.0, 90.0, 95.0]
            .iter()
            .map(|&p| kept_count(38, p))
            .collect();
        assert_eq!(datasets, [38, 36, 34, 30, 19, 4, 2]);
        let tests: Vec<_> = [0.0, 5.0, 10.0, 20.0, 50.0, 90.0, 95.0]
            .iter()
            .map(|&p| kept_count(53, p))
            .collect();
        assert_eq!(tests, [53, 50, 48, 42, 26, 5, 3]);
        assert_eq!(kept_count(10, 100.0), 0);
        assert_eq!(kept_count(0, 50.0), 0);
    }

    #[test]
    fn mtd_counts_and_whole_columns() {
        let m = synthetic(6, 38);
        let out = apply_mtd(&m, &OmissionSpec::new(OmissionMode::Mtd, 20.0, 3).unwrap()).unwrap();
        assert_eq!(out.datasets(), m.datasets());
        let full = (0..38).filter(|&d| out.present_in_dataset(d) == 6).count();
        let empty = (0..38).filter(|&d| out.present_in_dataset(d) == 0).count();
        assert_eq!((full, empty), (30, 8));
    }

    #[test]
    fn mta_counts_per_dataset() {
        let m = synthetic(53, 5);
        let out = apply_mta(&m, &OmissionSpec::new(OmissionMode::Mta, 10.0, 9).unwrap()).unwrap();
        assert!((0..5).all(|d| out.present_in_dataset(d) == 48));
        for r in out.records() {
            assert_eq!(
                m.get(&r.dataset_id, &r.algorithm_id).unwrap().accuracy,
                r.accuracy
            );
        }
    }

    #[test]
    fn zero_percent_is_identity() {
        let m = synthetic(7, 9);
        for mode in [OmissionMode::Mtd, OmissionMode::Mta] {
            let spec = OmissionSpec::new(mode, 0.0, 11).unwrap();
            assert_eq!(apply_omission(&m, &spec).unwrap(), m);
        }
    }

    #[test]
    fn mode_and_percent_checked() {
        let m = synthetic(3, 3);
        let mta = OmissionSpec {
            mode: OmissionMode::Mta,
            percent: 10.0,
            seed: 0,
        };
        assert!(apply_mtd(&m, &mta).is_err());
        assert!(OmissionSpec::new(OmissionMode::Mta, 101.0, 0).is_err());
        assert!(OmissionSpec::new(OmissionMode::Mta, -1.0, 0).is_err());
    }

    #[test]
    fn parse_mode() {
        assert_eq!("MTA".parse::<OmissionMode>().unwrap(), OmissionMode::Mta);
        assert!("x".parse::<OmissionMode>().is_err());
    }
}
