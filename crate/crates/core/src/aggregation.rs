//! Average ranking of incomplete rankings.
//!
//! Each ranking with `N` of `n_max` possible entries contributes with weight
//! `(N − 1) / (n_max − 1)`. Rankings are folded in one at a time: an
//! algorithm already in the aggregate and present in the incoming ranking
//! gets the weighted average of the two ranks and the sum of the two weights;
//! one absent from the incoming ranking keeps its rank and weight; one seen
//! for the first time is inserted with the incoming rank and weight.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::Ranking;
use crate::scalar::Scalar;

/// Completeness weight of a ranking with `n_present` of `n_max` entries.
pub fn ranking_weight<T: Scalar>(n_present: usize, n_max: usize) -> Result<T> {
    if n_max < 2 {
        return Err(Error::InvalidWeight(format!(
            "n_max = {n_max} (need at least 2)"
        )));
    }
    if n_present == 0 || n_present > n_max {
        return Err(Error::InvalidWeight(format!(
            "N = {n_present} outside 1..={n_max}"
        )));
    }
    Ok(T::from_count(n_present - 1) / T::from_count(n_max - 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateEntry<T> {
    pub rank: T,
    pub weight: T,
}

/// Aggregated ranks and accumulated weights, keyed by algorithm id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRanking<T> {
    entries: BTreeMap<String, AggregateEntry<T>>,
    n_max: usize,
}

/// Grid on which aggregated ranks and weights are compared when ordering.
///
/// Values closer than `ε^(3/4) · n_max` are treated as ties, so rounding
/// noise from the incremental fold never decides the order between ranks
/// that are equal in exact arithmetic.
fn resolution<T: Scalar>(n_max: usize) -> T {
    T::epsilon().powf(T::lit(0.75)) * T::from_count(n_max.max(1))
}

fn quantize<T: Scalar>(v: T, grid: T) -> T {
    (v / grid).round()
}

fn total_cmp<T: Scalar>(
    a: (&String, &AggregateEntry<T>),
    b: (&String, &AggregateEntry<T>),
    grid: T,
) -> Ordering {
    let q = |v| quantize(v, grid);
    q(a.1.rank)
        .partial_cmp(&q(b.1.rank))
        .unwrap_or(Ordering::Equal)
        .then_with(|| {
            q(b.1.weight)
                .partial_cmp(&q(a.1.weight))
                .unwrap_or(Ordering::Equal)
        })
        .then_with(|| a.0.cmp(b.0))
}

impl<T: Scalar> AggregateRanking<T> {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, algorithm_id: &str) -> Option<&AggregateEntry<T>> {
        self.entries.get(algorithm_id)
    }

    /// Entries in algorithm-id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &AggregateEntry<T>)> + '_ {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Entries sorted by rank ascending, then weight descending, then id.
    /// Ranks and weights that differ only by rounding noise count as equal.
    pub fn total_order(&self) -> Vec<(&str, &AggregateEntry<T>)> {
        let mut v: Vec<_> = self.entries.iter().collect();
        let grid = resolution::<T>(self.n_max);
        v.sort_by(|a, b| total_cmp(*a, *b, grid));
        v.into_iter().map(|(k, e)| (k.as_str(), e)).collect()
    }

    /// Ids in [`total_order`](Self::total_order).
    pub fn order(&self) -> Vec<String> {
        self.total_order()
            .into_iter()
            .map(|(k, _)| k.to_owned())
            .collect()
    }

    /// CSV `algorithm_id,rank,weight` in total order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["algorithm_id", "rank", "weight"])?;
        for (id, e) in self.total_order() {
            wtr.write_record([id.to_owned(), e.rank.to_string(), e.weight.to_string()])?;
        }
        wtr.flush().map_err(|source| Error::Io {
            path: Default::default(),
            source,
        })?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Accumulator<T> {
    rank: T,
    weight: T,
    observations: usize,
    plain_mean: T,
}

/// Left fold over rankings with explicit per-ranking weights.
///
/// When an element's accumulated weight stays 0 (every observation came from
/// a zero-weight ranking), its rank is the unweighted mean of what it has
/// seen.
#[derive(Debug, Clone)]
pub struct IncrementalAggregator<T> {
    n_max: usize,
    state: BTreeMap<String, Accumulator<T>>,
}

impl<T: Scalar> IncrementalAggregator<T> {
    pub fn new(n_max: usize) -> Self {
        Self {
            n_max,
            state: BTreeMap::new(),
        }
    }

    fn check(&self, ranking: &Ranking<T>) -> Result<()> {
        if ranking.n_max() != self.n_max {
            return Err(Error::InconsistentUniverse {
                expected: self.n_max,
                found: ranking.n_max(),
            });
        }
        Ok(())
    }

    /// Folds in a ranking with its completeness weight.
    pub fn push(&mut self, ranking: &Ranking<T>) -> Result<()> {
        self.check(ranking)?;
        let w = ranking_weight(ranking.len(), self.n_max)?;
        self.push_weighted(ranking, w)
    }

    /// Folds in a ranking with an arbitrary non-negative weight.
    pub fn push_weighted(&mut self, ranking: &Ranking<T>, w_new: T) -> Result<()> {
        self.check(ranking)?;
        if !w_new.is_finite() || w_new < T::zero() {
            return Err(Error::InvalidWeight(format!(
                "weight {w_new} is not finite and >= 0"
            )));
        }
        for (id, r_new) in ranking.iter() {
            match self.state.get_mut(id) {
                Some(acc) => {
                    acc.observations += 1;
                    let k = T::from_count(acc.observations);
                    acc.plain_mean = acc.plain_mean * ((k - T::one()) / k) + r_new / k;
                    let w_sum = acc.weight + w_new;
                    acc.rank = if w_sum > T::zero() {
                        acc.rank * acc.weight / w_sum + r_new * w_new / w_sum
                    } else {
                        acc.plain_mean
                    };
                    acc.weight = w_sum;
                }
                None => {
                    self.state.insert(
                        id.to_owned(),
                        Accumulator {
                            rank: r_new,
                            weight: w_new,
                            observations: 1,
                            plain_mean: r_new,
                        },
                    );
                }
            }
        }
        Ok(())
    }

    pub fn snapshot(&self) -> AggregateRanking<T> {
        AggregateRanking {
            entries: self
                .state
                .iter()
                .map(|(k, a)| {
                    (
                        k.clone(),
                        AggregateEntry {
                            rank: a.rank,
                            weight: a.weight,
                        },
                    )
                })
                .collect(),
            n_max: self.n_max,
        }
    }
}

/// Weighted incremental aggregation (AR-MTA), folding rankings in list order.
pub fn aggregate_incremental<T: Scalar>(
    rankings: &[Ranking<T>],
    n_max: usize,
) -> Result<AggregateRanking<T>> {
    if rankings.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut agg = IncrementalAggregator::new(n_max);
    for r in rankings {
        agg.push(r)?;
    }
    Ok(agg.snapshot())
}

/// Closed form of the incremental aggregation: per element, the
/// weight-averaged rank over the rankings that contain it.
pub fn aggregate_closed_form<T: Scalar>(
    rankings: &[Ranking<T>],
    n_max: usize,
) -> Result<AggregateRanking<T>> {
    if rankings.is_empty() {
        return Err(Error::EmptyInput);
    }
    // id -> (Σ w·r, Σ w, Σ r, count)
    let mut sums: BTreeMap<String, (T, T, T, usize)> = BTreeMap::new();
    for ranking in rankings {
        if ranking.n_max() != n_max {
            return Err(Error::InconsistentUniverse {
                expected: n_max,
                found: ranking.n_max(),
            });
        }
        let w: T = ranking_weight(ranking.len(), n_max)?;
        for (id, r) in ranking.iter() {
            let s = sums
                .entry(id.to_owned())
                .or_insert((T::zero(), T::zero(), T::zero(), 0));
            s.0 += w * r;
            s.1 += w;
            s.2 += r;
            s.3 += 1;
        }
    }
    let entries = sums
        .into_iter()
        .map(|(id, (wr, w, r, n))| {
            let rank = if w > T::zero() {
                wr / w
            } else {
                r / T::from_count(n)
            };
            (id, AggregateEntry { rank, weight: w })
        })
        .collect();
    Ok(AggregateRanking { entries, n_max })
}

/// Plain average ranking (AR): unweighted mean of each algorithm's observed
/// ranks; the weight field holds the number of observations.
///
/// Computed by the same fold as [`aggregate_incremental`] with every ranking
/// weighted 1, so on complete data the two agree bit for bit.
pub fn aggregate_baseline_ar<T: Scalar>(rankings: &[Ranking<T>]) -> Result<AggregateRanking<T>> {
    let first = rankings.first().ok_or(Error::EmptyInput)?;
    let mut agg = IncrementalAggregator::new(first.n_max());
    for r in rankings {
        agg.push_weighted(r, T::one())?;
    }
    Ok(agg.snapshot())
}
