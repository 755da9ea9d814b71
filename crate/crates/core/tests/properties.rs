use proptest::prelude::*;

use aid_core::clustering::{self, ClusterPartition};
use aid_core::framework::{compute_gap, run_aid, Adapter, AidConfig};
use aid_core::lad::{self, LadAdapter, LadModel};
use aid_core::s3vm::{assign_label, classify_unlabeled, UnlabeledSet};
use aid_core::svm::{self, SvmAdapter};
use aid_core::{DenseMatrix, Features, KernelKind, ProblemKind};

fn features(rows: &[Vec<f64>]) -> Features {
    Features::Dense(DenseMatrix::from_rows(rows).unwrap())
}

/// `n` rows of `m` features in [-5, 5].
fn matrix(n: std::ops::Range<usize>, m: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-5.0..5.0f64, m), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn splits_keep_a_partition(
        labels in prop::collection::vec(0usize..5, 1..40),
        splits in prop::collection::vec((0usize..8, prop::collection::vec(0usize..3, 40)), 0..6),
    ) {
        let mut p = ClusterPartition::from_labels(&labels);
        let n = p.n();
        for (k, side) in splits {
            let k = k % p.num_clusters();
            let members = p.members(k).to_vec();
            let mut groups = vec![Vec::new(); 3];
            for (j, &i) in members.iter().enumerate() {
                groups[side[j % side.len()]].push(i);
            }
            let before = (p.num_clusters(), p.generation());
            p.split_cluster(k, groups.clone()).unwrap();
            let parts = groups.iter().filter(|g| !g.is_empty()).count();
            prop_assert_eq!(p.num_clusters(), before.0 + parts - 1);
            prop_assert!(p.generation() > before.1);
            p.validate().unwrap();
        }
        let mut seen = vec![0; n];
        for g in p.clusters() {
            for &i in g {
                seen[i] += 1;
                prop_assert_eq!(p.clusters()[p.cluster_of(i)].contains(&i), true);
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn lad_aggregate_preserves_sums(
        rows in matrix(3..30, 3),
        ys in prop::collection::vec(-10.0..10.0f64, 30),
        labels in prop::collection::vec(0usize..4, 30),
    ) {
        let n = rows.len();
        let x = features(&rows);
        let y = &ys[..n];
        let p = ClusterPartition::from_labels(&labels[..n]);
        let agg = lad::aggregate(&p, &x, y);
        prop_assert_eq!(agg.weights.iter().sum::<f64>(), n as f64);
        let wy: f64 = agg.responses.iter().zip(&agg.weights).map(|(r, w)| r * w).sum();
        prop_assert!((wy - y.iter().sum::<f64>()).abs() < 1e-9);
        for c in 0..3 {
            let wx: f64 = (0..p.num_clusters()).map(|k| agg.centroids.row(k)[c] * agg.weights[k]).sum();
            let total: f64 = rows.iter().map(|r| r[c]).sum();
            prop_assert!((wx - total).abs() < 1e-9);
        }
    }

    #[test]
    fn gap_is_clamped(e in 0.0..1e6f64, f in 0.0..2e6f64) {
        let g = compute_gap(e, f);
        prop_assert!(g >= 0.0);
        if e > 0.0 {
            prop_assert!(g <= 1.0);
            if f >= e {
                prop_assert_eq!(g, 0.0);
            }
        }
    }

    #[test]
    fn lad_decluster_leaves_sign_pure_clusters(
        rows in matrix(2..40, 2),
        ys in prop::collection::vec(-10.0..10.0f64, 40),
        beta in prop::collection::vec(-3.0..3.0f64, 2),
        labels in prop::collection::vec(0usize..3, 40),
    ) {
        let n = rows.len();
        let x = features(&rows);
        let y = &ys[..n];
        let model = LadModel { beta };
        let mut p = ClusterPartition::from_labels(&labels[..n]);
        let was_optimal = lad::check_optimality(&p, &model, &x, y);
        let changed = lad::decluster(&mut p, &model, &x, y).unwrap();
        prop_assert_eq!(changed, !was_optimal);
        prop_assert!(lad::check_optimality(&p, &model, &x, y));
        p.validate().unwrap();
    }

    #[test]
    fn svm_decluster_leaves_hinge_pure_clusters(
        rows in matrix(6..40, 2),
        signs in prop::collection::vec(any::<bool>(), 40),
        groups in prop::collection::vec(0usize..3, 40),
    ) {
        let n = rows.len();
        let mut labels: Vec<f64> = signs[..n].iter().map(|&s| if s { 1.0 } else { -1.0 }).collect();
        labels[0] = 1.0;
        labels[1] = -1.0;
        let x = features(&rows);
        // Clusters must not mix classes.
        let ids: Vec<usize> = (0..n).map(|i| groups[i] * 2 + usize::from(labels[i] > 0.0)).collect();
        let p = ClusterPartition::from_labels(&ids);
        let mut a = SvmAdapter::new(&x, &labels, 0.1, KernelKind::Linear).unwrap().with_partition(p);
        let solved = a.solve().unwrap();
        a.decluster(&solved.model).unwrap();
        prop_assert!(svm::check_optimality(a.partition(), &solved.model, &labels));
    }

    #[test]
    fn assigned_label_minimizes_the_hinge(f in -5.0..5.0f64) {
        let d = assign_label(f);
        let hinge = |d: f64| (1.0 - d * f).max(0.0);
        prop_assert!(hinge(d) <= hinge(-d));
        prop_assert_eq!(d, if f >= 0.0 { 1.0 } else { -1.0 });
    }

    #[test]
    fn unlabeled_sets_cover_every_value(f in -3.0..3.0f64, d in prop::option::of(prop_oneof![Just(1.0), Just(-1.0)])) {
        let set = classify_unlabeled(f, d);
        let d = d.unwrap_or_else(|| assign_label(f));
        let hinge = 1.0 - d * f > 1e-9;
        let side = f > 1e-9;
        let expected = match (hinge, side) {
            (true, true) => UnlabeledSet::PlusPlus,
            (true, false) => UnlabeledSet::PlusMinus,
            (false, true) => UnlabeledSet::MinusPlus,
            (false, false) => UnlabeledSet::MinusMinus,
        };
        prop_assert_eq!(set, expected);
    }

    #[test]
    fn proportional_split_sums_to_total(sizes in prop::collection::vec(1usize..500, 1..6), extra in 0usize..50) {
        let k = sizes.len() + extra;
        let split = clustering::proportional_split(&sizes, k);
        prop_assert_eq!(split.iter().sum::<usize>(), k.min(sizes.iter().sum()));
        for (s, &size) in split.iter().zip(&sizes) {
            prop_assert!(*s >= 1 && *s <= size);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lad_lower_bound_never_drops(seed in 0u64..10_000, n in 30usize..200, m in 1usize..4) {
        let ds = aid_core::data::generate_lad(&aid_core::SyntheticSpec::lad(n, m, seed)).unwrap();
        let y = ds.response().unwrap();
        let mut a = LadAdapter::new(&ds.features, y).unwrap();
        let cfg = AidConfig::for_problem(ProblemKind::Lad).with_seed(seed).with_gap_tolerance(0.0);
        let run = run_aid(&mut a, &cfg, |_, _, _| {}).unwrap();
        let recs = &run.log.records;
        for w in recs.windows(2) {
            prop_assert!(w[1].f >= w[0].f - 1e-9 * w[0].f.abs().max(1.0));
            prop_assert!(w[1].e_best <= w[0].e_best);
            prop_assert!(w[1].num_clusters > w[0].num_clusters);
        }
        let last = recs.last().unwrap();
        prop_assert!(last.f <= last.e_best + 1e-9 * last.e_best.max(1.0));
    }
}
