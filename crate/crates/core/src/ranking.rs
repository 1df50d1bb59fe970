//! Per-dataset rankings and rank-correlation statistics.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meta_data::PerformanceMatrix;
use crate::scalar::Scalar;

const RANK_TOLERANCE: f64 = 1e-9;

/// Ranks of `values` in ascending order (smallest gets 1), ties averaged.
pub fn fractional_ranks<T: Scalar>(values: &[T]) -> Vec<T> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![T::zero(); values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        // positions start+1 ..= end share their mean
        let rank = T::from_count(start + 1 + end) / T::lit(2.0);
        for &i in &idx[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// A possibly partial ranking of algorithms, rank 1 being the best.
///
/// The `N` present entries carry the ranks `1..=N` with tied positions
/// replaced by their average; `n_max` is the size of the algorithm universe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking<T> {
    entries: BTreeMap<String, T>,
    n_max: usize,
}

impl<T: Scalar> Ranking<T> {
    /// Validates that the ranks form a fractional ranking of `1..=N`.
    pub fn new(entries: impl IntoIterator<Item = (String, T)>, n_max: usize) -> Result<Self> {
        let entries: Vec<(String, T)> = entries.into_iter().collect();
        let n = entries.len();
        if n == 0 {
            return Err(Error::InvalidRanking("no entries".into()));
        }
        if n > n_max {
            return Err(Error::InvalidRanking(format!(
                "{n} entries exceed n_max {n_max}"
            )));
        }
        let ranks: Vec<T> = entries.iter().map(|(_, r)| *r).collect();
        let expected = fractional_ranks(&ranks);
        let tol = T::lit(RANK_TOLERANCE);
        if ranks
            .iter()
            .zip(&expected)
            .any(|(r, e)| !r.is_finite() || (*r - *e).abs() > tol)
        {
            return Err(Error::InvalidRanking(
                "ranks must be 1..N with ties given the average position".into(),
            ));
        }
        let map: BTreeMap<String, T> = entries.into_iter().collect();
        if map.len() != n {
            return Err(Error::InvalidRanking("duplicate algorithm id".into()));
        }
        Ok(Self {
            entries: map,
            n_max,
        })
    }

    /// Ranking from a best-first order without ties.
    pub fn from_order<S: Into<String>>(
        order: impl IntoIterator<Item = S>,
        n_max: usize,
    ) -> Result<Self> {
        Self::new(
            order
                .into_iter()
                .enumerate()
                .map(|(i, id)| (id.into(), T::from_count(i + 1))),
            n_max,
        )
    }

    /// Ranking by descending score; equal scores share the average position.
    pub fn from_scores<S: Into<String>>(
        scores: impl IntoIterator<Item = (S, T)>,
        n_max: usize,
    ) -> Result<Self> {
        let (ids, neg): (Vec<String>, Vec<T>) =
            scores.into_iter().map(|(id, s)| (id.into(), -s)).unzip();
        let ranks = fractional_ranks(&neg);
        Self::new(ids.into_iter().zip(ranks), n_max)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Number of present entries, `N`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn rank(&self, algorithm_id: &str) -> Option<T> {
        self.entries.get(algorithm_id).copied()
    }

    /// Entries in algorithm-id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, T)> + '_ {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Ranks the present algorithms of one dataset by accuracy, best first.
pub fn rank_from_performance<T: Scalar>(
    matrix: &PerformanceMatrix<T>,
    dataset_id: &str,
) -> Result<Ranking<T>> {
    let d = matrix
        .dataset_index(dataset_id)
        .ok_or_else(|| Error::UnknownDataset(dataset_id.to_owned()))?;
    rank_column(matrix, d)
}

pub(crate) fn rank_column<T: Scalar>(
    matrix: &PerformanceMatrix<T>,
    dataset: usize,
) -> Result<Ranking<T>> {
    let scores: Vec<(String, T)> = matrix
        .column(dataset)
        .map(|(a, c)| (matrix.algorithms()[a].clone(), c.accuracy))
        .collect();
    if scores.is_empty() {
        return Err(Error::EmptyDataset(matrix.datasets()[dataset].clone()));
    }
    Ranking::from_scores(scores, matrix.n_algorithms())
}

/// Rankings of every dataset with at least one present cell, in dataset order.
pub fn rankings_of<T: Scalar>(matrix: &PerformanceMatrix<T>) -> Vec<Ranking<T>> {
    (0..matrix.n_datasets())
        .filter_map(|d| rank_column(matrix, d).ok())
        .collect()
}

fn pearson<T: Scalar>(x: &[T], y: &[T]) -> T {
    let n = T::from_count(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let denom = (sxx * syy).sqrt();
    if denom > T::zero() {
        (sxy / denom).max(-T::one()).min(T::one())
    } else {
        T::zero()
    }
}

/// Spearman correlation over the algorithms both rankings contain.
///
/// The common entries are re-ranked within the intersection and the Pearson
/// coefficient of the two rank vectors is returned, so ties need no
/// correction term. A ranking that is constant on the intersection yields 0.
pub fn spearman<T: Scalar>(r1: &Ranking<T>, r2: &Ranking<T>) -> Result<T> {
    let (x, y): (Vec<T>, Vec<T>) = r1
        .iter()
        .filter_map(|(id, a)| r2.rank(id).map(|b| (a, b)))
        .unzip();
    if x.len() < 2 {
        return Err(Error::TooFewCommon(x.len()));
    }
    Ok(pearson(&fractional_ranks(&x), &fractional_ranks(&y)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin<T> {
    pub low: T,
    pub high: T,
    pub count: usize,
}

/// Distribution of pairwise Spearman correlations between dataset rankings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Characterization<T> {
    pub histogram: Vec<HistogramBin<T>>,
    pub mean: T,
    /// Sample standard deviation (n − 1 denominator; 0 for a single pair).
    pub sd: T,
    /// `sd / mean` in percent.
    pub coeff_variation: T,
    pub n_pairs: usize,
    pub bin_width: T,
}

/// Scalar summary of a [`Characterization`], as exported to JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationSummary<T> {
    pub mean: T,
    pub sd: T,
    pub cv: T,
    pub n_pairs: usize,
    pub bin_width: T,
}

impl<T: Scalar> Characterization<T> {
    pub fn summary(&self) -> CharacterizationSummary<T> {
        CharacterizationSummary {
            mean: self.mean,
            sd: self.sd,
            cv: self.coeff_variation,
            n_pairs: self.n_pairs,
            bin_width: self.bin_width,
        }
    }

    /// CSV `bin_low,bin_high,count`.
    pub fn write_histogram_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["bin_low", "bin_high", "count"])?;
        for b in &self.histogram {
            wtr.write_record([b.low.to_string(), b.high.to_string(), b.count.to_string()])?;
        }
        wtr.flush().map_err(|source| Error::Io {
            path: Default::default(),
            source,
        })?;
        Ok(())
    }

    pub fn write_summary_json<W: Write>(&self, mut writer: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut writer, &self.summary())?;
        writeln!(writer).map_err(|source| Error::Io {
            path: Default::default(),
            source,
        })?;
        Ok(())
    }
}

/// Spearman correlation for every dataset pair sharing ≥ 2 algorithms,
/// summarized as a histogram over [−1, 1] plus mean, SD and CV.
pub fn characterize<T: Scalar>(
    matrix: &PerformanceMatrix<T>,
    bin_width: T,
) -> Result<Characterization<T>> {
    if !(bin_width > T::zero() && bin_width <= T::lit(2.0)) {
        return Err(Error::InvalidConfig(
            "histogram bin width must be in (0, 2]".into(),
        ));
    }
    let rankings: Vec<Ranking<T>> = rankings_of(matrix)
        .into_iter()
        .filter(|r| r.len() >= 2)
        .collect();
    let mut values = Vec::new();
    for (i, a) in rankings.iter().enumerate() {
        for b in &rankings[i + 1..] {
            if let Ok(rho) = spearman(a, b) {
                values.push(rho);
            }
        }
    }
    if values.is_empty() {
        return Err(Error::NoValidPairs);
    }

    let two = T::lit(2.0);
    let n_bins = (two / bin_width - T::lit(1e-9))
        .ceil()
        .to_usize()
        .unwrap_or(1)
        .max(1);
    let mut histogram: Vec<HistogramBin<T>> = (0..n_bins)
        .map(|i| HistogramBin {
            low: -T::one() + bin_width * T::from_count(i),
            high: (-T::one() + bin_width * T::from_count(i + 1)).min(T::one()),
            count: 0,
        })
        .collect();
    for &v in &values {
        let bin = ((v + T::one()) / bin_width)
            .floor()
            .to_usize()
            .unwrap_or(0)
            .min(n_bins - 1);
        histogram[bin].count += 1;
    }

    let n = T::from_count(values.len());
    let mean = values.iter().copied().sum::<T>() / n;
    let sd = if values.len() > 1 {
        let ss: T = values.iter().map(|&v| (v - mean) * (v - mean)).sum();
        (ss / (n - T::one())).sqrt()
    } else {
        T::zero()
    };
    Ok(Characterization {
        histogram,
        mean,
        sd,
        coeff_variation: sd / mean * T::lit(100.0),
        n_pairs: values.len(),
        bin_width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn matrix(csv: &str) -> PerformanceMatrix<f64> {
        PerformanceMatrix::read_csv(csv.as_bytes()).unwrap()
    }

    #[test]
    fn table1_column_d1() {
        let m = matrix(
            "dataset_id,algorithm_id,accuracy,runtime_seconds\n\
             D1,a1,0.85,1\nD1,a2,0.95,1\nD1,a3,0.63,1\nD1,a4,0.45,1\nD1,a5,0.78,1\nD1,a6,0.67,1\n",
        );
        let r = rank_from_performance(&m, "D1").unwrap();
        let got: Vec<_> = ["a1", "a2", "a3", "a4", "a5", "a6"]
            .map(|a| r.rank(a).unwrap())
            .into();
        assert_eq!(got, [2.0, 1.0, 5.0, 6.0, 3.0, 4.0]);
        assert_eq!(r.n_max(), 6);
    }

    #[test]
    fn full_tie_and_singleton() {
        let m = matrix(
            "dataset_id,algorithm_id,accuracy,runtime_seconds\n\
             D1,a1,0.5,1\nD1,a2,0.5,1\nD1,a3,0.5,1\nD1,a4,0.5,1\nD2,a3,0.9,1\n",
        );
        let r = rank_from_performance(&m, "D1").unwrap();
        assert!(r.iter().all(|(_, v)| v == 2.5));
        let s = rank_from_performance(&m, "D2").unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.rank("a3"), Some(1.0));
        assert_eq!(s.n_max(), 4);
    }

    #[test]
    fn unknown_and_empty_dataset() {
        let m = PerformanceMatrix::<f64>::empty(["a".to_string()], ["D".to_string()]).unwrap();
        assert!(matches!(
            rank_from_performance(&m, "X"),
            Err(Error::UnknownDataset(_))
        ));
        assert!(matches!(
            rank_from_performance(&m, "D"),
            Err(Error::EmptyDataset(_))
        ));
    }

    #[test]
    fn ranking_validation() {
        assert!(Ranking::<f64>::new([("a".into(), 1.0), ("b".into(), 3.0)], 5).is_err());
        assert!(Ranking::<f64>::new([("a".into(), 1.5), ("b".into(), 1.5)], 5).is_ok());
        assert!(Ranking::<f64>::new([("a".into(), 1.0)], 0).is_err());
        assert!(Ranking::<f64>::new([("a".into(), 1.0), ("a".into(), 2.0)], 5).is_err());
    }

    #[test]
    fn spearman_examples() {
        let r1 = Ranking::<f64>::from_order(["a", "b", "c", "d"], 4).unwrap();
        let r2 = Ranking::<f64>::from_order(["b", "a", "d", "c"], 4).unwrap();
        let rev = Ranking::<f64>::from_order(["d", "c", "b", "a"], 4).unwrap();
        assert_abs_diff_eq!(spearman(&r1, &r1).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(spearman(&r1, &rev).unwrap(), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(spearman(&r1, &r2).unwrap(), 0.6, epsilon = 1e-12);
    }

    #[test]
    fn spearman_partial_overlap_reranks() {
        // common {b, c, d}: r1 order b<c<d, r2 order b<c<d despite gaps
        let r1 = Ranking::<f64>::from_order(["a", "b", "c", "d"], 6).unwrap();
        let r2 = Ranking::<f64>::from_order(["b", "e", "c", "d"], 6).unwrap();
        assert_abs_diff_eq!(spearman(&r1, &r2).unwrap(), 1.0, epsilon = 1e-15);
        let r3 = Ranking::<f64>::from_order(["a", "e"], 6).unwrap();
        assert!(matches!(spearman(&r1, &r3), Err(Error::TooFewCommon(1))));
    }

    #[test]
    fn characterize_reversed_pair() {
        let m = matrix(
            "dataset_id,algorithm_id,accuracy,runtime_seconds\n\
             D1,a1,0.9,1\nD1,a2,0.8,1\nD1,a3,0.7,1\nD2,a1,0.7,1\nD2,a2,0.8,1\nD2,a3,0.9,1\n",
        );
        let c = characterize(&m, 0.1).unwrap();
        assert_eq!(c.n_pairs, 1);
        assert_abs_diff_eq!(c.mean, -1.0, epsilon = 1e-15);
        assert_eq!(c.sd, 0.0);
        assert_eq!(c.histogram.len(), 20);
        assert_eq!(c.histogram[0].count, 1);
        assert_abs_diff_eq!(c.histogram[19].high, 1.0);
    }

    #[test]
    fn characterize_needs_a_pair() {
        let m =
            matrix("dataset_id,algorithm_id,accuracy,runtime_seconds\nD1,a1,0.9,1\nD1,a2,0.8,1\n");
        assert!(matches!(characterize(&m, 0.1), Err(Error::NoValidPairs)));
    }
}
