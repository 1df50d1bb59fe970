use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Cell, PerformanceMatrix};
use crate::error::{Error, Result};
use crate::ranking::characterize;
use crate::scalar::Scalar;

/// Parameters of the synthetic meta-dataset generator.
///
/// Each algorithm gets a latent quality drawn from N(0, 1); on every dataset
/// its score is `quality + noise_scale * z` with fresh `z ~ N(0, 1)`. Scores
/// are squashed monotonically into accuracies in (0.05, 0.95), so rankings
/// depend only on the scores. Runtimes are log-uniform, with
/// `runtime_log_range` given in log10 seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_algorithms: usize,
    pub n_datasets: usize,
    /// Mean pairwise Spearman the noise was calibrated for. Informational for
    /// [`generate_synthetic`]; consumed by [`calibrate_noise_scale`].
    pub target_mean_spearman: f64,
    pub noise_scale: f64,
    pub runtime_log_range: (f64, f64),
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_algorithms: 53,
            n_datasets: 39,
            target_mean_spearman: 0.51,
            noise_scale: 1.0,
            runtime_log_range: (0.0, 3.0),
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_algorithms < 2 {
            return Err(Error::InvalidConfig(
                "n_algorithms must be at least 2".into(),
            ));
        }
        if self.n_datasets < 1 {
            return Err(Error::InvalidConfig("n_datasets must be positive".into()));
        }
        if !(-1.0..=1.0).contains(&self.target_mean_spearman) {
            return Err(Error::InvalidConfig(
                "target_mean_spearman outside [-1, 1]".into(),
            ));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::InvalidConfig(
                "noise_scale must be finite and >= 0".into(),
            ));
        }
        let (lo, hi) = self.runtime_log_range;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidConfig(
                "runtime_log_range must satisfy lo < hi".into(),
            ));
        }
        Ok(())
    }

    /// Spec whose noise scale has been calibrated to `target_mean_spearman`.
    pub fn calibrated(
        n_algorithms: usize,
        n_datasets: usize,
        target_mean_spearman: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut spec = Self {
            n_algorithms,
            n_datasets,
            target_mean_spearman,
            seed,
            ..Self::default()
        };
        spec.noise_scale = calibrate_noise_scale(&spec)?;
        Ok(spec)
    }
}

fn zero_padded(prefix: char, n: usize) -> impl Iterator<Item = String> {
    let width = n.to_string().len();
    (1..=n).map(move |i| format!("{prefix}{i:0width$}"))
}

/// Complete synthetic matrix; a pure function of `spec`.
pub fn generate_synthetic<T: Scalar>(spec: &SyntheticSpec) -> Result<PerformanceMatrix<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let quality: Vec<f64> = (0..spec.n_algorithms)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    let mut matrix = PerformanceMatrix::empty(
        zero_padded('a', spec.n_algorithms),
        zero_padded('d', spec.n_datasets),
    )?;
    let (lo, hi) = spec.runtime_log_range;
    for d in 0..spec.n_datasets {
        for (a, q) in quality.iter().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            let u: f64 = rng.random();
            let score = q + spec.noise_scale * z;
            let accuracy = 0.5 + 0.45 * (score / 2.0).tanh();
            let runtime = 10f64.powf(lo + (hi - lo) * u);
            matrix.set_cell(
                d,
                a,
                Cell {
                    accuracy: T::lit(accuracy),
                    runtime_seconds: T::lit(runtime),
                },
            );
        }
    }
    Ok(matrix)
}

fn measured_mean_spearman(spec: &SyntheticSpec, noise_scale: f64) -> Result<f64> {
    let spec = SyntheticSpec {
        noise_scale,
        ..spec.clone()
    };
    let matrix = generate_synthetic::<f64>(&spec)?;
    Ok(characterize(&matrix, 0.1)?.mean)
}

/// Bisects `noise_scale` until the generated matrix (same seed) has a mean
/// pairwise Spearman correlation matching `spec.target_mean_spearman`.
pub fn calibrate_noise_scale(spec: &SyntheticSpec) -> Result<f64> {
    spec.validate()?;
    if spec.n_datasets < 2 {
        return Err(Error::InvalidConfig(
            "calibration needs at least 2 datasets".into(),
        ));
    }
    let target = spec.target_mean_spearman;
    if target >= 1.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while measured_mean_spearman(spec, hi)? > target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::InvalidConfig(format!(
                "mean Spearman {target} is not reachable by adding noise"
            )));
        }
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if measured_mean_spearman(spec, mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
