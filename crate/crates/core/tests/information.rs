use phonia::infotheory::{
    build_report, discretize, discretize_with, mutual_information, BinRange, ClassLabel, LabeledDataset,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 100_000;

fn uniform(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..N).map(|_| rng.random::<f64>()).collect()
}

#[test]
fn uniform_values_fill_min_max_bins_evenly() {
    let d = discretize_with(&uniform(1), 50, BinRange::MinMax).unwrap();
    let expected = (N / 50) as f64;
    for (b, &c) in d.occupancy().iter().enumerate() {
        assert!((c as f64 - expected).abs() <= 3.0 * expected.sqrt(), "bin {b}: {c}");
    }
}

#[test]
fn percentile_range_clamps_tails_into_end_bins() {
    let d = discretize(&uniform(2), 50).unwrap();
    let occ = d.occupancy();
    // The range is [p1, p99], so interior bins are 0.98/50 of the records wide
    // and each end bin also receives the clamped 1%.
    let interior = 0.98 * N as f64 / 50.0;
    for &c in &occ[1..49] {
        assert!((c as f64 - interior).abs() <= 3.0 * interior.sqrt(), "{c}");
    }
    let end = interior + 0.01 * N as f64;
    for c in [occ[0], occ[49]] {
        assert!((c as f64 - end).abs() <= 3.0 * end.sqrt(), "{c}");
    }
}

#[test]
fn class_independent_feature_carries_almost_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let values = uniform(4);
    let labels: Vec<ClassLabel> = (0..N)
        .map(|_| if rng.random_bool(0.3) { ClassLabel::Pathological } else { ClassLabel::Normal })
        .collect();
    let mi = mutual_information(&discretize(&values, 50).unwrap(), &labels).unwrap();
    assert!((0.0..=0.01).contains(&mi), "{mi}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn report_identity_and_bounds(
        rows in prop::collection::vec((prop::collection::vec(-5.0f64..5.0, 3), any::<bool>()), 8..200),
        bins in 2usize..12,
    ) {
        let mut rows: Vec<(Vec<f64>, ClassLabel)> = rows
            .into_iter()
            .map(|(v, p)| (v, if p { ClassLabel::Pathological } else { ClassLabel::Normal }))
            .collect();
        rows[0].1 = ClassLabel::Normal;
        rows[1].1 = ClassLabel::Pathological;
        let ds = LabeledDataset::from_rows(vec!["a".into(), "b".into(), "c".into()], &rows).unwrap();
        let report = build_report(&ds, bins).unwrap();
        prop_assert!(report.identity_holds());
        let m = report.matrix();
        for i in 0..3 {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&m[i][i]));
            for j in i + 1..3 {
                // Joint information above the diagonal never falls below either part.
                prop_assert!(m[i][j] >= m[i][i].max(m[j][j]) - 1e-12);
                prop_assert!(m[i][j] <= 1.0 + 1e-12);
            }
        }
    }
}
