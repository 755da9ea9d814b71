//! Least absolute deviation regression through aggregation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{self, ClusterPartition};
use crate::data::{DenseMatrix, Features, ProblemKind};
use crate::error::{AidError, Result};
use crate::framework::{Adapter, AggregatedSolve};
use crate::subsolvers::{solve_weighted_lad, WeightedLadInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadModel {
    pub beta: Vec<f64>,
}

impl LadModel {
    pub fn residual(&self, x: &Features, y: &[f64], i: usize) -> f64 {
        y[i] - x.dot(i, &self.beta)
    }
}

/// Weighted centroids of one partition.
#[derive(Debug, Clone, PartialEq)]
pub struct LadAggregate {
    pub centroids: DenseMatrix,
    pub responses: Vec<f64>,
    pub weights: Vec<f64>,
}

pub fn aggregate(partition: &ClusterPartition, x: &Features, y: &[f64]) -> LadAggregate {
    let clusters = partition.clusters();
    LadAggregate {
        centroids: clustering::centroids(x, clusters, None),
        responses: clustering::cluster_means(y, clusters),
        weights: partition.sizes(),
    }
}

pub fn solve(agg: &LadAggregate) -> Result<(LadModel, f64)> {
    let s = solve_weighted_lad(&WeightedLadInstance { x: &agg.centroids, y: &agg.responses, weights: &agg.weights })?;
    Ok((LadModel { beta: s.beta }, s.objective))
}

/// `Σ_i |y_i − x_i·β|`, summed in entry order so repeated calls agree bit for bit.
pub fn evaluate(model: &LadModel, x: &Features, y: &[f64]) -> f64 {
    let abs: Vec<f64> = (0..y.len()).into_par_iter().map(|i| model.residual(x, y, i).abs()).collect();
    abs.iter().sum()
}

/// Residuals within `1e-9·(1 + |y|)` of zero count as nonpositive.
pub fn is_positive(residual: f64, y: f64) -> bool {
    residual > 1e-9 * (1.0 + y.abs())
}

fn positive_flags(model: &LadModel, x: &Features, y: &[f64]) -> Vec<bool> {
    (0..y.len()).into_par_iter().map(|i| is_positive(model.residual(x, y, i), y[i])).collect()
}

/// True when every cluster's residuals share a sign.
pub fn check_optimality(partition: &ClusterPartition, model: &LadModel, x: &Features, y: &[f64]) -> bool {
    let pos = positive_flags(model, x, y);
    partition.clusters().iter().all(|g| g.iter().all(|&i| pos[i] == pos[g[0]]))
}

/// Split every mixed-sign cluster into its positive and nonpositive members.
pub fn decluster(partition: &mut ClusterPartition, model: &LadModel, x: &Features, y: &[f64]) -> Result<bool> {
    let pos = positive_flags(model, x, y);
    let mut changed = false;
    for k in 0..partition.num_clusters() {
        let (plus, minus): (Vec<usize>, Vec<usize>) = partition.members(k).iter().partition(|&&i| pos[i]);
        if !plus.is_empty() && !minus.is_empty() {
            partition.split_cluster(k, vec![plus, minus])?;
            changed = true;
        }
    }
    Ok(changed)
}

/// Adapter over a feature matrix and response.
pub struct LadAdapter<'a> {
    x: &'a Features,
    y: &'a [f64],
    partition: Option<ClusterPartition>,
}

impl<'a> LadAdapter<'a> {
    pub fn new(x: &'a Features, y: &'a [f64]) -> Result<Self> {
        if x.n_rows() != y.len() {
            return Err(AidError::InvalidInput("response length differs from row count".into()));
        }
        if x.n_rows() <= x.n_cols() {
            return Err(AidError::InvalidInput(format!(
                "LAD needs more entries than features (n = {}, m = {})",
                x.n_rows(),
                x.n_cols()
            )));
        }
        Ok(LadAdapter { x, y, partition: None })
    }

    /// Start from a given partition instead of the initializer.
    pub fn with_partition(mut self, partition: ClusterPartition) -> Self {
        self.partition = Some(partition);
        self
    }

    pub fn partition(&self) -> &ClusterPartition {
        self.partition.as_ref().expect("adapter is initialized")
    }
}

impl Adapter for LadAdapter<'_> {
    type Model = LadModel;

    fn problem(&self) -> ProblemKind {
        ProblemKind::Lad
    }

    fn num_entries(&self) -> usize {
        self.y.len()
    }

    fn num_features(&self) -> usize {
        self.x.n_cols()
    }

    fn initialize(&mut self, k0: usize, seed: u64) -> Result<()> {
        if self.partition.is_none() {
            self.partition = Some(clustering::init_lad_clusters(self.x, self.y, k0, seed)?);
        }
        Ok(())
    }

    fn num_clusters(&self) -> usize {
        self.partition().num_clusters()
    }

    fn solve(&mut self) -> Result<AggregatedSolve<LadModel>> {
        let (model, objective) = solve(&aggregate(self.partition(), self.x, self.y))?;
        Ok(AggregatedSolve { model, objective, exact: true })
    }

    fn evaluate(&self, model: &LadModel) -> f64 {
        evaluate(model, self.x, self.y)
    }

    fn check_optimality(&self, model: &LadModel) -> bool {
        check_optimality(self.partition(), model, self.x, self.y)
    }

    fn decluster(&mut self, model: &LadModel) -> Result<bool> {
        let (x, y) = (self.x, self.y);
        decluster(self.partition.as_mut().expect("adapter is initialized"), model, x, y)
    }
}

/// Solve the full problem directly.
pub fn solve_direct(x: &Features, y: &[f64]) -> Result<(LadModel, f64)> {
    let dense = x.to_dense();
    let weights = vec![1.0; y.len()];
    let s = solve_weighted_lad(&WeightedLadInstance { x: &dense, y, weights: &weights })?;
    Ok((LadModel { beta: s.beta }, s.objective))
}
