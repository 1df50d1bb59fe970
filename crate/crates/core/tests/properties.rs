use std::collections::BTreeSet;

use proptest::prelude::*;
use rankbench::{
    apply_mta, apply_mtd, kept_count, rank_from_performance, spearman, OmissionMode, OmissionSpec,
    PerformanceMatrix, RunRecord,
};

/// Sparse matrix: `None` cells are absent. Accuracies on a coarse grid so
/// that ties occur.
fn arb_matrix() -> impl Strategy<Value = PerformanceMatrix> {
    (1usize..8, 1usize..6)
        .prop_flat_map(|(n_alg, n_ds)| {
            proptest::collection::vec(
                proptest::option::weighted(0.8, (0u32..=20, 1u32..10_000)),
                n_alg * n_ds,
            )
            .prop_map(move |cells| (n_alg, cells))
        })
        .prop_map(|(n_alg, cells)| {
            let records = cells.into_iter().enumerate().filter_map(|(i, c)| {
                c.map(|(acc, rt)| RunRecord {
                    dataset_id: format!("D{}", i / n_alg),
                    algorithm_id: format!("a{}", i % n_alg),
                    accuracy: acc as f64 / 20.0,
                    runtime_seconds: rt as f64 / 7.0,
                })
            });
            PerformanceMatrix::from_records(records).unwrap()
        })
}

proptest! {
    #[test]
    fn csv_round_trip(m in arb_matrix()) {
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let back = PerformanceMatrix::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(&back, &m);
        let mut again = Vec::new();
        back.write_csv(&mut again).unwrap();
        prop_assert_eq!(buf, again);
    }

    #[test]
    fn rank_sum_invariant(m in arb_matrix()) {
        for d in m.datasets() {
            let r = rank_from_performance(&m, d).unwrap();
            let n = r.len() as f64;
            let sum: f64 = r.iter().map(|(_, v)| v).sum();
            prop_assert!((sum - n * (n + 1.0) / 2.0).abs() < 1e-9);
            prop_assert_eq!(r.n_max(), m.n_algorithms());
        }
    }

    #[test]
    fn spearman_symmetric_and_monotone_invariant(m in arb_matrix(), shift in 0.0f64..0.5) {
        // a strictly monotone transform of every accuracy keeps every ranking
        let transformed = PerformanceMatrix::from_records(m.records().map(|r| RunRecord {
            accuracy: (r.accuracy + shift).powi(3) / (1.0 + shift).powi(3),
            ..r
        }))
        .unwrap();
        let ds = m.datasets();
        for (i, a) in ds.iter().enumerate() {
            for b in &ds[i + 1..] {
                let (ra, rb) = (rank_from_performance(&m, a).unwrap(), rank_from_performance(&m, b).unwrap());
                let Ok(rho) = spearman(&ra, &rb) else { continue };
                prop_assert!((-1.0..=1.0).contains(&rho));
                prop_assert!((rho - spearman(&rb, &ra).unwrap()).abs() < 1e-12);
                let ta = rank_from_performance(&transformed, a).unwrap();
                let tb = rank_from_performance(&transformed, b).unwrap();
                prop_assert!((rho - spearman(&ta, &tb).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn spearman_self_is_one_without_ties(n in 2usize..30) {
        let r = rankbench::Ranking::from_order((0..n).map(|i| format!("x{i}")), n).unwrap();
        prop_assert!((spearman(&r, &r).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mtd_empties_whole_columns(m in arb_matrix(), percent in 0.0f64..=100.0, seed in any::<u64>()) {
        let spec = OmissionSpec::new(OmissionMode::Mtd, percent, seed).unwrap();
        let out = apply_mtd(&m, &spec).unwrap();
        prop_assert_eq!(out.datasets(), m.datasets());
        let mut kept = 0;
        for d in 0..m.n_datasets() {
            let now = out.present_in_dataset(d);
            prop_assert!(now == 0 || now == m.present_in_dataset(d));
            if (0..m.n_algorithms()).all(|a| out.cell(d, a) == m.cell(d, a)) {
                kept += 1;
            }
        }
        // columns that were already empty count as kept either way
        prop_assert!(kept >= kept_count(m.n_datasets(), percent));
        prop_assert_eq!(&apply_mtd(&m, &spec).unwrap(), &out);
    }

    #[test]
    fn mta_keeps_exact_counts(m in arb_matrix(), percent in 0.0f64..=100.0, seed in any::<u64>()) {
        let spec = OmissionSpec::new(OmissionMode::Mta, percent, seed).unwrap();
        let out = apply_mta(&m, &spec).unwrap();
        for d in 0..m.n_datasets() {
            prop_assert_eq!(out.present_in_dataset(d), kept_count(m.present_in_dataset(d), percent));
        }
        for r in out.records() {
            let orig = m.get(&r.dataset_id, &r.algorithm_id).unwrap();
            prop_assert_eq!((orig.accuracy, orig.runtime_seconds), (r.accuracy, r.runtime_seconds));
        }
        prop_assert_eq!(&apply_mta(&m, &spec).unwrap(), &out);
    }
}

#[test]
fn mta_draws_are_spread_uniformly() {
    // each of 10 algorithms kept in half the draws on average
    let records = (0..10).map(|a| RunRecord {
        dataset_id: "D".into(),
        algorithm_id: format!("a{a}"),
        accuracy: 0.5,
        runtime_seconds: 1.0,
    });
    let m = PerformanceMatrix::from_records(records).unwrap();
    let mut hits = [0u32; 10];
    for seed in 0..4000 {
        let out = apply_mta(
            &m,
            &OmissionSpec::new(OmissionMode::Mta, 50.0, seed).unwrap(),
        )
        .unwrap();
        for (a, _) in out.column(0) {
            hits[a] += 1;
        }
    }
    // binomial(4000, 0.5): sd ≈ 32
    assert!(hits.iter().all(|&h| (1800..=2200).contains(&h)), "{hits:?}");
}

#[test]
fn mtd_seeds_give_different_subsets() {
    let records = (0..20).map(|d| RunRecord {
        dataset_id: format!("D{d:02}"),
        algorithm_id: "a".into(),
        accuracy: 0.5,
        runtime_seconds: 1.0,
    });
    let m = PerformanceMatrix::from_records(records).unwrap();
    let subsets: BTreeSet<Vec<String>> = (0..20)
        .map(|seed| {
            let out = apply_mtd(
                &m,
                &OmissionSpec::new(OmissionMode::Mtd, 50.0, seed).unwrap(),
            )
            .unwrap();
            out.records().map(|r| r.dataset_id).collect()
        })
        .collect();
    assert!(subsets.len() > 15);
}
