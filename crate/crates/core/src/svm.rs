//! Soft-margin SVM through aggregation, with a centroid path and a kernel (Gram) path.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{self, ClusterPartition};
use crate::data::{DenseMatrix, Features, ModelParams, ProblemKind};
use crate::error::{AidError, Result};
use crate::framework::{Adapter, AggregatedSolve};
use crate::subsolvers::{
    solve_weighted_svm, FunctionKernel, GramMatrix, KernelKind, KernelMatrix, SvmInput, WeightedSvmInstance,
};

pub const DEFAULT_PENALTY: f64 = 0.1;

/// Hinge arguments within this distance of zero count as nonpositive.
pub const HINGE_TOLERANCE: f64 = 1e-9;

/// A solution mapped back to the original entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    /// Present on the centroid path.
    pub w: Option<Vec<f64>>,
    pub b: f64,
    /// `f(x_i)` including the bias.
    pub decision: Vec<f64>,
    pub xi: Vec<f64>,
    pub w_norm_sq: f64,
    /// Dual variables of the aggregated problem, one per cluster.
    pub cluster_alpha: Vec<f64>,
    /// Dual variables spread over the original entries.
    pub alpha: Vec<f64>,
    pub objective: f64,
}

impl SvmModel {
    pub fn hinge_arg(&self, labels: &[f64], i: usize) -> f64 {
        1.0 - labels[i] * self.decision[i]
    }

    /// Fraction of entries with `sign(f) = y`, counting `f = 0` as +1.
    pub fn training_accuracy(&self, labels: &[f64]) -> f64 {
        classification_rate(&self.decision, labels)
    }

    /// Parameters for a model file.
    pub fn params(&self, x: &Features, labels: &[f64], kernel: KernelKind) -> ModelParams {
        match &self.w {
            Some(w) => ModelParams::LinearSvm { w: w.clone(), b: self.b },
            None => {
                let sv: Vec<usize> = (0..self.alpha.len()).filter(|&i| self.alpha[i] > 0.0).collect();
                ModelParams::KernelSvm {
                    kernel,
                    support: sv.iter().map(|&i| x.dense_row(i)).collect(),
                    coef: sv.iter().map(|&i| self.alpha[i] * labels[i]).collect(),
                    b: self.b,
                }
            }
        }
    }
}

pub fn classification_rate(decision: &[f64], labels: &[f64]) -> f64 {
    let hits = decision.iter().zip(labels).filter(|(f, y)| (if **f >= 0.0 { 1.0 } else { -1.0 }) == **y).count();
    hits as f64 / labels.len() as f64
}

/// Centroids, cluster labels and sizes of a label-pure partition.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmAggregate {
    pub centroids: DenseMatrix,
    pub labels: Vec<f64>,
    pub weights: Vec<f64>,
}

pub fn cluster_labels(partition: &ClusterPartition, labels: &[f64]) -> Result<Vec<f64>> {
    partition
        .clusters()
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let y = labels[g[0]];
            if g.iter().any(|&i| labels[i] != y) {
                Err(AidError::InvalidInput(format!("cluster {k} mixes labels")))
            } else {
                Ok(y)
            }
        })
        .collect()
}

pub fn aggregate_linear(partition: &ClusterPartition, x: &Features, labels: &[f64]) -> Result<SvmAggregate> {
    Ok(SvmAggregate {
        centroids: clustering::centroids(x, partition.clusters(), None),
        labels: cluster_labels(partition, labels)?,
        weights: partition.sizes(),
    })
}

/// Block means of `gram` over the clusters.
pub fn aggregate_kernel(partition: &ClusterPartition, gram: &GramMatrix) -> GramMatrix {
    let kc = partition.num_clusters();
    let assign = partition.assignment();
    let sizes = partition.sizes();
    let mut data = vec![0.0; kc * kc];
    data.par_chunks_mut(kc).enumerate().for_each(|(k, row)| {
        for &i in partition.members(k) {
            for (j, v) in gram.row(i).iter().enumerate() {
                row[assign[j]] += v;
            }
        }
        for (q, v) in row.iter_mut().enumerate() {
            *v /= sizes[k] * sizes[q];
        }
    });
    for k in 0..kc {
        for q in 0..k {
            data[k * kc + q] = data[q * kc + k];
        }
    }
    GramMatrix::new(kc, data).expect("mirrored above")
}

/// Spread cluster duals evenly over members.
pub fn disaggregate_dual(cluster_alpha: &[f64], partition: &ClusterPartition, penalty: f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; partition.n()];
    for (k, g) in partition.clusters().iter().enumerate() {
        let size = g.len() as f64;
        if cluster_alpha[k] < 0.0 || cluster_alpha[k] > size * penalty * (1.0 + 1e-12) {
            return Err(AidError::InvalidInput(format!("cluster dual {k} is outside its box")));
        }
        let a = (cluster_alpha[k] / size).min(penalty);
        for &i in g {
            out[i] = a;
        }
    }
    Ok(out)
}

/// Cluster slack as the mean of member slacks.
pub fn convert_to_aggregated(xi: &[f64], partition: &ClusterPartition) -> Vec<f64> {
    clustering::cluster_means(xi, partition.clusters())
}

/// Membership of each entry in the positive-hinge side.
pub fn hinge_positive(model: &SvmModel, labels: &[f64]) -> Vec<bool> {
    (0..labels.len()).map(|i| model.hinge_arg(labels, i) > HINGE_TOLERANCE).collect()
}

pub fn check_optimality(partition: &ClusterPartition, model: &SvmModel, labels: &[f64]) -> bool {
    let pos = hinge_positive(model, labels);
    partition.clusters().iter().all(|g| g.iter().all(|&i| pos[i] == pos[g[0]]))
}

pub fn decluster(partition: &mut ClusterPartition, model: &SvmModel, labels: &[f64]) -> Result<bool> {
    let pos = hinge_positive(model, labels);
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

fn finish_model(
    w: Option<Vec<f64>>,
    b: f64,
    decision: Vec<f64>,
    labels: &[f64],
    w_norm_sq: f64,
    cluster_alpha: Vec<f64>,
    alpha: Vec<f64>,
    penalty: f64,
) -> SvmModel {
    let xi: Vec<f64> = decision.iter().zip(labels).map(|(f, y)| (1.0 - y * f).max(0.0)).collect();
    let objective = 0.5 * w_norm_sq + penalty * xi.iter().sum::<f64>();
    SvmModel { w, b, decision, xi, w_norm_sq, cluster_alpha, alpha, objective }
}

/// How the aggregated problem is formed.
pub enum SvmPath {
    /// Solve on cluster centroids (linear kernel only).
    Centroid,
    /// Solve on block means of the full Gram matrix.
    Gram(GramMatrix),
}

pub struct SvmAdapter<'a> {
    x: &'a Features,
    labels: &'a [f64],
    penalty: f64,
    kernel: KernelKind,
    path: SvmPath,
    partition: Option<ClusterPartition>,
}

impl<'a> SvmAdapter<'a> {
    /// Centroid path for the linear kernel; Gram path otherwise.
    pub fn new(x: &'a Features, labels: &'a [f64], penalty: f64, kernel: KernelKind) -> Result<Self> {
        let path = match kernel {
            KernelKind::Linear => SvmPath::Centroid,
            _ => SvmPath::Gram(GramMatrix::from_features(x, kernel)?),
        };
        Self::with_path(x, labels, penalty, kernel, path)
    }

    /// Gram path even for the linear kernel.
    pub fn gram_path(x: &'a Features, labels: &'a [f64], penalty: f64, kernel: KernelKind) -> Result<Self> {
        let gram = GramMatrix::from_features(x, kernel)?;
        Self::with_path(x, labels, penalty, kernel, SvmPath::Gram(gram))
    }

    fn with_path(x: &'a Features, labels: &'a [f64], penalty: f64, kernel: KernelKind, path: SvmPath) -> Result<Self> {
        if x.n_rows() != labels.len() {
            return Err(AidError::InvalidInput("label length differs from row count".into()));
        }
        if !(penalty > 0.0) || !penalty.is_finite() {
            return Err(AidError::Config(format!("penalty must be positive, got {penalty}")));
        }
        if matches!(path, SvmPath::Centroid) && kernel != KernelKind::Linear {
            return Err(AidError::Config("the centroid path needs the linear kernel".into()));
        }
        Ok(SvmAdapter { x, labels, penalty, kernel, path, partition: None })
    }

    pub fn with_partition(mut self, partition: ClusterPartition) -> Self {
        self.partition = Some(partition);
        self
    }

    pub fn partition(&self) -> &ClusterPartition {
        self.partition.as_ref().expect("adapter is initialized")
    }

    pub fn kernel(&self) -> KernelKind {
        self.kernel
    }

    fn solve_aggregated(&self) -> Result<(SvmModel, f64)> {
        let part = self.partition();
        let y_agg = cluster_labels(part, self.labels)?;
        let weights = part.sizes();
        match &self.path {
            SvmPath::Centroid => {
                let centroids = Features::Dense(clustering::centroids(self.x, part.clusters(), None));
                let s = solve_weighted_svm(&WeightedSvmInstance {
                    input: SvmInput::Linear(&centroids),
                    labels: &y_agg,
                    weights: &weights,
                    penalty: self.penalty,
                })?;
                let w = s.w.clone().expect("linear solve yields w");
                let decision: Vec<f64> = (0..self.x.n_rows()).into_par_iter().map(|i| self.x.dot(i, &w) + s.b).collect();
                let alpha = disaggregate_dual(&s.dual.alpha, part, self.penalty)?;
                let model = finish_model(Some(w), s.b, decision, self.labels, s.w_norm_sq, s.dual.alpha, alpha, self.penalty);
                Ok((model, s.objective))
            }
            SvmPath::Gram(gram) => {
                let agg = aggregate_kernel(part, gram);
                let s = solve_weighted_svm(&WeightedSvmInstance {
                    input: SvmInput::Kernel(&agg),
                    labels: &y_agg,
                    weights: &weights,
                    penalty: self.penalty,
                })?;
                let alpha = disaggregate_dual(&s.dual.alpha, part, self.penalty)?;
                let coef: Vec<(usize, f64)> =
                    (0..alpha.len()).filter(|&j| alpha[j] > 0.0).map(|j| (j, alpha[j] * self.labels[j])).collect();
                let decision: Vec<f64> = (0..self.x.n_rows())
                    .into_par_iter()
                    .map(|i| {
                        let row = gram.row(i);
                        coef.iter().map(|&(j, c)| c * row[j]).sum::<f64>() + s.b
                    })
                    .collect();
                let model = finish_model(None, s.b, decision, self.labels, s.w_norm_sq, s.dual.alpha, alpha, self.penalty);
                Ok((model, s.objective))
            }
        }
    }
}

impl Adapter for SvmAdapter<'_> {
    type Model = SvmModel;

    fn problem(&self) -> ProblemKind {
        ProblemKind::Svm
    }

    fn num_entries(&self) -> usize {
        self.labels.len()
    }

    fn num_features(&self) -> usize {
        self.x.n_cols()
    }

    fn initialize(&mut self, k0: usize, seed: u64) -> Result<()> {
        if self.partition.is_none() {
            self.partition =
                Some(clustering::init_svm_clusters(self.x, self.labels, k0, seed, self.kernel, self.penalty)?);
        }
        Ok(())
    }

    fn num_clusters(&self) -> usize {
        self.partition().num_clusters()
    }

    fn solve(&mut self) -> Result<AggregatedSolve<SvmModel>> {
        let (model, objective) = self.solve_aggregated()?;
        Ok(AggregatedSolve { model, objective, exact: true })
    }

    fn evaluate(&self, model: &SvmModel) -> f64 {
        model.objective
    }

    fn check_optimality(&self, model: &SvmModel) -> bool {
        check_optimality(self.partition(), model, self.labels)
    }

    fn decluster(&mut self, model: &SvmModel) -> Result<bool> {
        let labels = self.labels;
        decluster(self.partition.as_mut().expect("adapter is initialized"), model, labels)
    }
}

/// Solve the full problem directly.
pub fn solve_direct(x: &Features, labels: &[f64], penalty: f64, kernel: KernelKind) -> Result<SvmModel> {
    let n = labels.len();
    let weights = vec![1.0; n];
    match kernel {
        KernelKind::Linear => {
            let s = solve_weighted_svm(&WeightedSvmInstance { input: SvmInput::Linear(x), labels, weights: &weights, penalty })?;
            let w = s.w.clone().expect("linear solve yields w");
            let decision = s.scores.iter().map(|f| f + s.b).collect();
            let alpha = s.dual.alpha.clone();
            Ok(finish_model(Some(w), s.b, decision, labels, s.w_norm_sq, s.dual.alpha, alpha, penalty))
        }
        _ => {
            let km = FunctionKernel::new(x, kernel);
            let gram;
            let kernel_ref: &dyn KernelMatrix = if n <= crate::subsolvers::MAX_GRAM_SIZE {
                gram = GramMatrix::from_features(x, kernel)?;
                &gram
            } else {
                &km
            };
            let s = solve_weighted_svm(&WeightedSvmInstance { input: SvmInput::Kernel(kernel_ref), labels, weights: &weights, penalty })?;
            let decision = s.scores.iter().map(|f| f + s.b).collect();
            let alpha = s.dual.alpha.clone();
            Ok(finish_model(None, s.b, decision, labels, s.w_norm_sq, s.dual.alpha, alpha, penalty))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framework::{run_aid, AidConfig};

    fn dense(rows: Vec<Vec<f64>>) -> Features {
        Features::Dense(DenseMatrix::from_rows(&rows).unwrap())
    }

    #[test]
    fn aggregate_linear_examples() {
        let x = dense(vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![5.0, 5.0]]);
        let p = ClusterPartition::from_groups(3, vec![vec![0, 1], vec![2]]).unwrap();
        let a = aggregate_linear(&p, &x, &[1.0, 1.0, -1.0]).unwrap();
        assert_eq!(a.centroids.row(0), &[1.0, 0.0]);
        assert_eq!(a.labels, vec![1.0, -1.0]);
        assert_eq!(a.weights, vec![2.0, 1.0]);
        assert!(aggregate_linear(&p, &x, &[1.0, -1.0, -1.0]).is_err());
    }

    #[test]
    fn block_mean_of_linear_gram_is_centroid_product() {
        let x = dense(vec![vec![1.0], vec![2.0], vec![3.0]]);
        let gram = GramMatrix::from_features(&x, KernelKind::Linear).unwrap();
        let p = ClusterPartition::from_groups(3, vec![vec![0, 2], vec![1]]).unwrap();
        let agg = aggregate_kernel(&p, &gram);
        assert_eq!(agg.entry(0, 1), 4.0);
        assert_eq!(agg.entry(1, 0), 4.0);
        assert_eq!(agg.entry(0, 0), (1.0 + 3.0 + 3.0 + 9.0) / 4.0);
        let singles = aggregate_kernel(&ClusterPartition::singletons(3), &gram);
        assert_eq!(singles, gram);
    }

    #[test]
    fn rbf_block_diagonal_is_at_most_one() {
        let x = dense(vec![vec![0.0], vec![0.0], vec![1.0], vec![4.0]]);
        let gram = GramMatrix::from_features(&x, KernelKind::Rbf { gamma: 0.5 }).unwrap();
        let p = ClusterPartition::from_groups(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let agg = aggregate_kernel(&p, &gram);
        assert_eq!(agg.entry(0, 0), 1.0);
        assert!(agg.entry(1, 1) < 1.0);
    }

    #[test]
    fn dual_disaggregation_examples() {
        let p = ClusterPartition::from_groups(4, vec![vec![0, 1, 2], vec![3]]).unwrap();
        let a = disaggregate_dual(&[0.6, 0.0], &p, 1.0).unwrap();
        assert!((a[0] - 0.2).abs() < 1e-15 && a[3] == 0.0);
        assert!(disaggregate_dual(&[3.5, 0.0], &p, 1.0).is_err());
    }

    #[test]
    fn slack_conversion_examples() {
        let p = ClusterPartition::from_groups(3, vec![vec![0, 1], vec![2]]).unwrap();
        assert_eq!(convert_to_aggregated(&[0.0, 2.0, 0.5], &p), vec![1.0, 0.5]);
    }

    #[test]
    fn margin_boundary_members_stay_with_the_nonpositive_side() {
        let model = finish_model(None, 0.0, vec![1.0, 3.0, -0.5], &[1.0, 1.0, 1.0], 0.0, vec![], vec![], 1.0);
        assert_eq!(model.xi, vec![0.0, 0.0, 1.5]);
        let p = ClusterPartition::from_groups(3, vec![vec![0, 1], vec![2]]).unwrap();
        assert!(check_optimality(&p, &model, &[1.0, 1.0, 1.0]));
        let mut q = ClusterPartition::from_groups(3, vec![vec![0, 1, 2]]).unwrap();
        assert!(decluster(&mut q, &model, &[1.0, 1.0, 1.0]).unwrap());
        assert_eq!(q.clusters(), &[vec![2], vec![0, 1]]);
    }

    #[test]
    fn symmetric_pair_is_solved_at_the_start() {
        let x = dense(vec![vec![1.0, 0.0], vec![-1.0, 0.0]]);
        let y = [1.0, -1.0];
        let mut a = SvmAdapter::new(&x, &y, 10.0, KernelKind::Linear).unwrap();
        let run = run_aid(&mut a, &AidConfig::for_problem(ProblemKind::Svm).with_rate(1.0), |_, _, _| {}).unwrap();
        let w = run.model.w.unwrap();
        assert!((w[0] - 1.0).abs() < 1e-9 && w[1].abs() < 1e-12 && run.model.b.abs() < 1e-9);
        assert_eq!(run.log.iterations(), 0);
    }

    #[test]
    fn singleton_start_matches_direct_solve() {
        use crate::data::{generate_svm, SyntheticSpec};
        let ds = generate_svm(&SyntheticSpec::svm(60, 3, 5)).unwrap();
        let y = ds.labels().unwrap();
        let mut a = SvmAdapter::new(&ds.features, y, 0.1, KernelKind::Linear)
            .unwrap()
            .with_partition(ClusterPartition::singletons(60));
        let run = run_aid(&mut a, &AidConfig::for_problem(ProblemKind::Svm), |_, _, _| {}).unwrap();
        let direct = solve_direct(&ds.features, y, 0.1, KernelKind::Linear).unwrap();
        assert!((run.log.last().f - direct.objective).abs() <= 1e-9 * direct.objective.max(1.0));
    }
}
