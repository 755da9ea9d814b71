//! Subsolvers checked against brute force and first-order certificates.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use aid_core::subsolvers::{
    solve_s3vm_bnb, solve_svm, solve_weighted_lad, BnbLimits, BnbProblem, HyperplaneConstraint, SvmInput, SvmProblem,
    WeightedLadInstance,
};
use aid_core::{DenseMatrix, Features};

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::new(rows, cols, (0..rows * cols).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap()
}

fn weighted_l1(x: &DenseMatrix, y: &[f64], w: &[f64], beta: &[f64]) -> f64 {
    (0..y.len()).map(|i| w[i] * (y[i] - x.row(i).iter().zip(beta).map(|(a, b)| a * b).sum::<f64>()).abs()).sum()
}

/// Some optimal fit interpolates `m` of the points, so trying every `m`-subset finds the optimum.
fn lad_by_vertices(x: &DenseMatrix, y: &[f64], w: &[f64]) -> f64 {
    let (k, m) = (x.rows(), x.cols());
    let mut best = f64::INFINITY;
    let mut subset: Vec<usize> = (0..m).collect();
    loop {
        let a = DMatrix::from_fn(m, m, |r, c| x.row(subset[r])[c]);
        let b = DVector::from_fn(m, |r, _| y[subset[r]]);
        if let Some(beta) = a.lu().solve(&b) {
            if beta.iter().all(|v| v.is_finite()) {
                best = best.min(weighted_l1(x, y, w, beta.as_slice()));
            }
        }
        // Next subset in lexicographic order.
        let Some(pos) = (0..m).rev().find(|&p| subset[p] < k - m + p) else { break };
        subset[pos] += 1;
        for q in pos + 1..m {
            subset[q] = subset[q - 1] + 1;
        }
    }
    best
}

#[test]
fn weighted_lad_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..60 {
        let m = 1 + case % 3;
        let k = m + 2 + rng.random_range(0..(12 - m - 1));
        let x = random_matrix(&mut rng, k, m);
        let y: Vec<f64> = (0..k).map(|_| rng.random_range(-5.0..5.0)).collect();
        let w: Vec<f64> = (0..k).map(|_| rng.random_range(1..6) as f64).collect();
        let s = solve_weighted_lad(&WeightedLadInstance { x: &x, y: &y, weights: &w }).unwrap();
        let oracle = lad_by_vertices(&x, &y, &w);
        assert!((s.objective - oracle).abs() <= 1e-9 * oracle.max(1.0), "case {case}: {} vs {oracle}", s.objective);
        assert!((weighted_l1(&x, &y, &w, &s.beta) - s.objective).abs() <= 1e-9 * oracle.max(1.0));
        assert!((s.dual_objective - s.objective).abs() <= 1e-7 * oracle.max(1.0));
    }
}

#[test]
fn svm_solution_satisfies_kkt() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..30 {
        let (n, m) = (8 + case % 25, 1 + case % 4);
        let x = random_matrix(&mut rng, n, m);
        let mut labels: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        labels[0] = 1.0;
        labels[1] = -1.0;
        let costs: Vec<f64> = (0..n).map(|_| rng.random_range(1..4) as f64 * 0.2).collect();
        let features = Features::Dense(x.clone());
        let s = solve_svm(&SvmProblem { input: SvmInput::Linear(&features), labels: &labels, costs: &costs, constraint: None })
            .unwrap();

        let alpha = &s.dual.alpha;
        let mut w = vec![0.0; m];
        for i in 0..n {
            for c in 0..m {
                w[c] += alpha[i] * labels[i] * x.row(i)[c];
            }
        }
        let tol = 1e-6;
        assert!(alpha.iter().zip(&labels).map(|(a, y)| a * y).sum::<f64>().abs() < 1e-9);
        let mut primal = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
        for i in 0..n {
            let margin = labels[i] * (x.row(i).iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + s.b);
            assert!((-1e-12..=costs[i] + 1e-12).contains(&alpha[i]));
            if alpha[i] < 1e-9 {
                assert!(margin >= 1.0 - tol, "case {case} entry {i}: free margin {margin}");
            } else if alpha[i] > costs[i] - 1e-9 {
                assert!(margin <= 1.0 + tol, "case {case} entry {i}: bound margin {margin}");
            } else {
                assert!((margin - 1.0).abs() <= tol, "case {case} entry {i}: support margin {margin}");
            }
            primal += costs[i] * (1.0 - margin).max(0.0);
        }
        let dual = alpha.iter().sum::<f64>() - 0.5 * w.iter().map(|v| v * v).sum::<f64>();
        assert!((primal - s.objective).abs() <= 1e-6 * primal.max(1.0), "case {case}");
        assert!((primal - dual).abs() <= 1e-6 * primal.max(1.0), "case {case}: duality gap {}", primal - dual);
    }
}

/// Best objective over every labeling of the unlabeled rows.
fn enumerate_labelings(p: &BnbProblem<'_>) -> f64 {
    let (l, u, m) = (p.labeled.rows(), p.unlabeled.rows(), p.labeled.cols());
    let mut data = p.labeled.as_slice().to_vec();
    data.extend_from_slice(p.unlabeled.as_slice());
    let all = Features::Dense(DenseMatrix::new(l + u, m, data).unwrap());
    let mut costs = p.labeled_costs.to_vec();
    costs.extend_from_slice(p.unlabeled_costs);
    (0..1u32 << u)
        .map(|mask| {
            let mut labels = p.labels.to_vec();
            labels.extend((0..u).map(|j| if mask >> j & 1 == 1 { 1.0 } else { -1.0 }));
            solve_svm(&SvmProblem { input: SvmInput::Linear(&all), labels: &labels, costs: &costs, constraint: p.constraint })
                .map(|s| s.objective)
                .unwrap_or(f64::INFINITY)
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn branch_and_bound_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for case in 0..24 {
        let m = 1 + case % 3;
        let (l, u) = (4 + case % 5, 1 + case % 8);
        let labeled = random_matrix(&mut rng, l, m);
        let unlabeled = random_matrix(&mut rng, u, m);
        let mut labels: Vec<f64> = (0..l).map(|i| if labeled.row(i)[0] >= 0.0 { 1.0 } else { -1.0 }).collect();
        labels[0] = 1.0;
        labels[1] = -1.0;
        let labeled_costs: Vec<f64> = (0..l).map(|_| rng.random_range(1..5) as f64).collect();
        let unlabeled_costs: Vec<f64> = (0..u).map(|_| rng.random_range(1..4) as f64 * 0.5).collect();
        let constraint = (case % 2 == 1).then(|| HyperplaneConstraint {
            point: (0..m).map(|c| (0..u).map(|j| unlabeled.row(j)[c]).sum::<f64>() / u as f64).collect(),
            target: labels.iter().sum::<f64>() / l as f64,
        });
        let p = BnbProblem {
            labeled: &labeled,
            labels: &labels,
            labeled_costs: &labeled_costs,
            unlabeled: &unlabeled,
            unlabeled_costs: &unlabeled_costs,
            constraint: constraint.as_ref(),
        };
        let s = solve_s3vm_bnb(&p, &BnbLimits::unlimited()).unwrap();
        let oracle = enumerate_labelings(&p);
        assert!(s.exact);
        assert!((s.objective - oracle).abs() <= 1e-6 * oracle.max(1.0), "case {case}: {} vs {oracle}", s.objective);
    }
}
