//! Exact solver for the aggregated semi-supervised SVM by branching on the labels of
//! unlabeled entities.
//!
//! A node fixes labels for a subset of unlabeled entities. Its bound is the convex SVM over
//! the labeled entities and the fixed unlabeled ones; undecided entities contribute nothing,
//! which can only lower the optimum. Any node solution also yields a feasible completion by
//! labeling every undecided entity with the sign of its decision value.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use super::svm::{solve_svm, HyperplaneConstraint, SvmInput, SvmProblem};
use crate::data::{DenseMatrix, Features};
use crate::error::{AidError, Result};

#[derive(Clone, Copy)]
pub struct BnbProblem<'a> {
    pub labeled: &'a DenseMatrix,
    pub labels: &'a [f64],
    /// Slack cost of each labeled entity.
    pub labeled_costs: &'a [f64],
    pub unlabeled: &'a DenseMatrix,
    /// Slack cost of each unlabeled entity.
    pub unlabeled_costs: &'a [f64],
    pub constraint: Option<&'a HyperplaneConstraint>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BnbLimits {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
}

impl BnbLimits {
    pub fn unlimited() -> Self {
        BnbLimits { time_limit: None, node_limit: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnbSolution {
    pub w: Vec<f64>,
    pub b: f64,
    /// Label of each unlabeled entity.
    pub d: Vec<f64>,
    pub objective: f64,
    /// False when a limit stopped the search before optimality was proven.
    pub exact: bool,
    pub nodes: usize,
}

struct Node {
    bound: f64,
    seq: usize,
    fixed: Vec<Option<f64>>,
    w: Vec<f64>,
    b: f64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Max-heap on the reversed key: smallest bound first, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(other.seq.cmp(&self.seq))
    }
}

struct Search<'a> {
    p: BnbProblem<'a>,
    m: usize,
    nodes: usize,
    best: Option<BnbSolution>,
}

pub fn solve_s3vm_bnb(p: &BnbProblem<'_>, limits: &BnbLimits) -> Result<BnbSolution> {
    let m = p.labeled.cols();
    if p.unlabeled.cols() != m && p.unlabeled.rows() > 0 {
        return Err(AidError::InvalidInput("labeled and unlabeled rows differ in dimension".into()));
    }
    if p.labels.len() != p.labeled.rows()
        || p.labeled_costs.len() != p.labeled.rows()
        || p.unlabeled_costs.len() != p.unlabeled.rows()
    {
        return Err(AidError::InvalidInput("branch-and-bound dimensions are inconsistent".into()));
    }
    if !(p.labels.contains(&1.0) && p.labels.contains(&-1.0)) {
        return Err(AidError::InvalidInput("semi-supervised SVM needs labeled entities of both classes".into()));
    }

    let started = Instant::now();
    let ku = p.unlabeled.rows();
    let mut s = Search { p: *p, m, nodes: 0, best: None };
    let mut heap = BinaryHeap::new();
    let root = s.solve_node(vec![None; ku])?;
    heap.push(root);
    let mut seq = 1;
    let mut exact = true;

    while let Some(node) = heap.pop() {
        let incumbent = s.best.as_ref().map_or(f64::INFINITY, |b| b.objective);
        if node.bound >= incumbent - prune_tol(incumbent) {
            break;
        }
        let out_of_nodes = limits.node_limit.is_some_and(|n| s.nodes >= n);
        let out_of_time = limits.time_limit.is_some_and(|t| started.elapsed() >= t);
        if out_of_nodes || out_of_time {
            exact = false;
            break;
        }
        let Some(u) = s.branch_entity(&node) else {
            continue;
        };
        let f = s.decision(&node.w, node.b, u);
        let first = if f >= 0.0 { 1.0 } else { -1.0 };
        for label in [first, -first] {
            let mut fixed = node.fixed.clone();
            fixed[u] = Some(label);
            let mut child = s.solve_node(fixed)?;
            child.seq = seq;
            seq += 1;
            let incumbent = s.best.as_ref().map_or(f64::INFINITY, |b| b.objective);
            if child.bound < incumbent - prune_tol(incumbent) {
                heap.push(child);
            }
        }
    }

    let mut best = s.best.expect("root completion always sets an incumbent");
    best.exact = exact;
    best.nodes = s.nodes;
    Ok(best)
}

fn prune_tol(incumbent: f64) -> f64 {
    if incumbent.is_finite() {
        1e-10 * incumbent.abs().max(1.0)
    } else {
        0.0
    }
}

impl Search<'_> {
    fn decision(&self, w: &[f64], b: f64, u: usize) -> f64 {
        self.p.unlabeled.row(u).iter().zip(w).map(|(x, w)| x * w).sum::<f64>() + b
    }

    fn solve_node(&mut self, fixed: Vec<Option<f64>>) -> Result<Node> {
        self.nodes += 1;
        let p = &self.p;
        let nl = p.labeled.rows();
        let mut data = p.labeled.as_slice().to_vec();
        let mut labels = p.labels.to_vec();
        let mut costs = p.labeled_costs.to_vec();
        for (u, d) in fixed.iter().enumerate() {
            if let Some(d) = d {
                data.extend_from_slice(p.unlabeled.row(u));
                labels.push(*d);
                costs.push(p.unlabeled_costs[u]);
            }
        }
        let rows = Features::Dense(DenseMatrix::new(labels.len(), self.m, data)?);
        let sol = solve_svm(&SvmProblem { input: SvmInput::Linear(&rows), labels: &labels, costs: &costs, constraint: p.constraint })?;
        let w = sol.w.expect("linear input yields w");
        let node = Node { bound: sol.objective, seq: 0, fixed, w, b: sol.b };
        debug_assert!(labels.len() >= nl);

        // Completion: undecided entities take the sign of their decision value.
        let mut objective = node.bound;
        let mut d = Vec::with_capacity(node.fixed.len());
        for (u, fx) in node.fixed.iter().enumerate() {
            match fx {
                Some(v) => d.push(*v),
                None => {
                    let f = self.decision(&node.w, node.b, u);
                    d.push(if f >= 0.0 { 1.0 } else { -1.0 });
                    objective += p.unlabeled_costs[u] * (1.0 - f.abs()).max(0.0);
                }
            }
        }
        if self.best.as_ref().is_none_or(|b| objective < b.objective) {
            self.best = Some(BnbSolution { w: node.w.clone(), b: node.b, d, objective, exact: false, nodes: 0 });
        }
        Ok(node)
    }

    /// Undecided entity with the largest weighted hinge loss, if any has positive loss.
    fn branch_entity(&self, node: &Node) -> Option<usize> {
        let mut best = None;
        let mut worst = 0.0;
        for (u, fx) in node.fixed.iter().enumerate() {
            if fx.is_some() {
                continue;
            }
            let loss = self.p.unlabeled_costs[u] * (1.0 - self.decision(&node.w, node.b, u).abs()).max(0.0);
            if loss > worst {
                worst = loss;
                best = Some(u);
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn enumerate(p: &BnbProblem<'_>) -> f64 {
        let ku = p.unlabeled.rows();
        let mut best = f64::INFINITY;
        for mask in 0..(1u32 << ku) {
            let mut data = p.labeled.as_slice().to_vec();
            let mut labels = p.labels.to_vec();
            let mut costs = p.labeled_costs.to_vec();
            for u in 0..ku {
                data.extend_from_slice(p.unlabeled.row(u));
                labels.push(if mask >> u & 1 == 1 { 1.0 } else { -1.0 });
                costs.push(p.unlabeled_costs[u]);
            }
            let rows = Features::Dense(DenseMatrix::new(labels.len(), p.labeled.cols(), data).unwrap());
            let s = solve_svm(&SvmProblem { input: SvmInput::Linear(&rows), labels: &labels, costs: &costs, constraint: p.constraint }).unwrap();
            best = best.min(s.objective);
        }
        best
    }

    #[test]
    fn no_unlabeled_reduces_to_svm() {
        let xl = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        let xu = DenseMatrix::zeros(0, 2);
        let p = BnbProblem { labeled: &xl, labels: &[1.0, -1.0], labeled_costs: &[10.0, 10.0], unlabeled: &xu, unlabeled_costs: &[], constraint: None };
        let s = solve_s3vm_bnb(&p, &BnbLimits::unlimited()).unwrap();
        assert!(s.exact);
        assert!((s.objective - 0.5).abs() < 1e-12);
        assert_eq!(s.nodes, 1);
    }

    #[test]
    fn single_unlabeled_takes_the_better_labeling() {
        let xl = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        let xu = DenseMatrix::from_rows(&[vec![0.3, 1.0]]).unwrap();
        let p = BnbProblem { labeled: &xl, labels: &[1.0, -1.0], labeled_costs: &[5.0, 5.0], unlabeled: &xu, unlabeled_costs: &[1.0], constraint: None };
        let s = solve_s3vm_bnb(&p, &BnbLimits::unlimited()).unwrap();
        assert!((s.objective - enumerate(&p)).abs() < 1e-9);
    }

    #[test]
    fn matches_enumeration_on_a_small_instance() {
        let xl = DenseMatrix::from_rows(&[vec![1.0, 0.2], vec![0.8, -0.5], vec![-1.0, 0.1], vec![-0.7, 0.6]]).unwrap();
        let xu_rows: Vec<Vec<f64>> = (0..7).map(|i| vec![(i as f64 * 1.7).sin(), (i as f64 * 0.9).cos()]).collect();
        let xu = DenseMatrix::from_rows(&xu_rows).unwrap();
        let costs_u: Vec<f64> = (1..=7).map(|i| i as f64 * 0.3).collect();
        let p = BnbProblem { labeled: &xl, labels: &[1.0, 1.0, -1.0, -1.0], labeled_costs: &[5.0; 4], unlabeled: &xu, unlabeled_costs: &costs_u, constraint: None };
        let s = solve_s3vm_bnb(&p, &BnbLimits::unlimited()).unwrap();
        let e = enumerate(&p);
        assert!((s.objective - e).abs() <= 1e-8 * e.max(1.0), "{} vs {}", s.objective, e);
    }

    #[test]
    fn node_limit_clears_the_exact_flag() {
        let xl = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        let xu = DenseMatrix::from_rows(&[vec![0.1, 0.0], vec![-0.1, 0.3], vec![0.05, -0.2]]).unwrap();
        let p = BnbProblem { labeled: &xl, labels: &[1.0, -1.0], labeled_costs: &[5.0, 5.0], unlabeled: &xu, unlabeled_costs: &[1.0; 3], constraint: None };
        let s = solve_s3vm_bnb(&p, &BnbLimits { time_limit: None, node_limit: Some(1) }).unwrap();
        assert!(!s.exact);
    }
}
