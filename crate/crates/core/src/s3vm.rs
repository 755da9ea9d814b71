//! Semi-supervised SVM through aggregation of labeled and unlabeled entries.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{self, ClusterPartition};
use crate::data::{DenseMatrix, Features, ModelParams, ProblemKind};
use crate::error::{AidError, Result};
use crate::framework::{Adapter, AggregatedSolve};
use crate::subsolvers::{solve_s3vm_bnb, BnbLimits, BnbProblem, HyperplaneConstraint};

/// Side and hinge values within this distance of zero count as nonpositive.
pub const SIGN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BalanceMode {
    #[default]
    None,
    /// Mean unlabeled decision value equals the mean labeled label.
    Constraint,
    /// Per-class scaling of the labeled penalty.
    Cost,
}

impl FromStr for BalanceMode {
    type Err = AidError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(BalanceMode::None),
            "constraint" => Ok(BalanceMode::Constraint),
            "cost" => Ok(BalanceMode::Cost),
            _ => Err(AidError::Config(format!("unknown balance mode '{s}' (none, constraint, cost)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S3vmParams {
    pub labeled_penalty: f64,
    pub unlabeled_penalty: f64,
    pub balance: BalanceMode,
    /// With `BalanceMode::Cost`, boost the minority class instead of the printed rule.
    pub balance_cost_swapped: bool,
    #[serde(skip)]
    pub limits: BnbLimits,
}

impl Default for S3vmParams {
    fn default() -> Self {
        S3vmParams {
            labeled_penalty: 5.0,
            unlabeled_penalty: 1.0,
            balance: BalanceMode::None,
            balance_cost_swapped: false,
            limits: BnbLimits::unlimited(),
        }
    }
}

/// Labeled-penalty multipliers `(positive class, negative class)` for balance cost.
///
/// As printed, the negative class gets `max(1, n_neg/n_pos)` and the positive class
/// `max(1, n_pos/n_neg)`. The swapped reading exchanges the ratios.
pub fn balance_multipliers(n_pos: usize, n_neg: usize, swapped: bool) -> (f64, f64) {
    let (p, q) = (n_pos as f64, n_neg as f64);
    if swapped {
        ((q / p).max(1.0), (p / q).max(1.0))
    } else {
        ((p / q).max(1.0), (q / p).max(1.0))
    }
}

/// Labeled and unlabeled entries of a partially labeled dataset.
#[derive(Debug, Clone)]
pub struct S3vmData<'a> {
    pub x: &'a Features,
    pub labeled: Vec<usize>,
    pub labels: Vec<f64>,
    pub unlabeled: Vec<usize>,
}

impl<'a> S3vmData<'a> {
    pub fn new(x: &'a Features, partial: &[Option<f64>]) -> Result<Self> {
        if x.n_rows() != partial.len() {
            return Err(AidError::InvalidInput("label length differs from row count".into()));
        }
        let mut labeled = Vec::new();
        let mut labels = Vec::new();
        let mut unlabeled = Vec::new();
        for (i, l) in partial.iter().enumerate() {
            match l {
                Some(y) => {
                    labeled.push(i);
                    labels.push(*y);
                }
                None => unlabeled.push(i),
            }
        }
        Ok(S3vmData { x, labeled, labels, unlabeled })
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&y| y > 0.0).count();
        (pos, self.labels.len() - pos)
    }

    /// Slack cost per unit weight of each labeled entry.
    pub fn labeled_unit_costs(&self, params: &S3vmParams) -> Vec<f64> {
        let (mp, mn) = if params.balance == BalanceMode::Cost {
            let (p, n) = self.class_counts();
            balance_multipliers(p, n, params.balance_cost_swapped)
        } else {
            (1.0, 1.0)
        };
        self.labels.iter().map(|&y| params.labeled_penalty * if y > 0.0 { mp } else { mn }).collect()
    }

    pub fn balance_constraint(&self) -> Option<HyperplaneConstraint> {
        if self.unlabeled.is_empty() {
            return None;
        }
        let point = self.x.mean_of(&self.unlabeled);
        let target = self.labels.iter().sum::<f64>() / self.labels.len() as f64;
        Some(HyperplaneConstraint { point, target })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S3vmModel {
    pub w: Vec<f64>,
    pub b: f64,
    /// Label of each unlabeled entry, in the order of `S3vmData::unlabeled`.
    pub d: Vec<f64>,
    /// Labels chosen for the unlabeled clusters in the aggregated solve.
    pub cluster_d: Vec<f64>,
    /// Decision values of labeled entries.
    pub labeled_decision: Vec<f64>,
    /// Decision values of unlabeled entries.
    pub unlabeled_decision: Vec<f64>,
}

impl S3vmModel {
    pub fn params(&self) -> ModelParams {
        ModelParams::S3vm { w: self.w.clone(), b: self.b, d: self.d.clone() }
    }
}

/// Error-minimizing label for a decision value: +1 iff `f ≥ 0`.
pub fn assign_label(f: f64) -> f64 {
    if f >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

pub fn assign_labels(w: &[f64], b: f64, data: &S3vmData<'_>) -> Vec<f64> {
    data.unlabeled.iter().map(|&i| assign_label(data.x.dot(i, w) + b)).collect()
}

/// Labeled entries: positive hinge or not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LabeledSet {
    Plus,
    Minus,
}

/// Unlabeled entries: (hinge sign, side sign).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnlabeledSet {
    PlusPlus,
    PlusMinus,
    MinusPlus,
    MinusMinus,
}

pub fn classify_labeled(f: f64, y: f64) -> LabeledSet {
    if 1.0 - y * f > SIGN_TOLERANCE {
        LabeledSet::Plus
    } else {
        LabeledSet::Minus
    }
}

/// With `d = None` the label follows the decision value.
pub fn classify_unlabeled(f: f64, d: Option<f64>) -> UnlabeledSet {
    let d = d.unwrap_or_else(|| assign_label(f));
    let hinge = 1.0 - d * f > SIGN_TOLERANCE;
    let side = f > SIGN_TOLERANCE;
    match (hinge, side) {
        (true, true) => UnlabeledSet::PlusPlus,
        (true, false) => UnlabeledSet::PlusMinus,
        (false, true) => UnlabeledSet::MinusPlus,
        (false, false) => UnlabeledSet::MinusMinus,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginClassification {
    pub labeled: Vec<LabeledSet>,
    pub unlabeled: Vec<UnlabeledSet>,
}

/// Classify every entry; `d` gives per-unlabeled-entry labels, `None` uses the decision sign.
pub fn classify_margins(model: &S3vmModel, data: &S3vmData<'_>, d: Option<&[f64]>) -> MarginClassification {
    MarginClassification {
        labeled: model.labeled_decision.iter().zip(&data.labels).map(|(&f, &y)| classify_labeled(f, y)).collect(),
        unlabeled: model
            .unlabeled_decision
            .iter()
            .enumerate()
            .map(|(j, &f)| classify_unlabeled(f, d.map(|d| d[j])))
            .collect(),
    }
}

/// `½‖w‖² + Σ_labeled c_i ξ_i + M_u Σ_unlabeled ξ_i` with labels from the decision sign.
pub fn evaluate(model: &S3vmModel, data: &S3vmData<'_>, params: &S3vmParams) -> f64 {
    let costs = data.labeled_unit_costs(params);
    let wsq: f64 = model.w.iter().map(|v| v * v).sum();
    let lab: f64 = (0..data.labels.len())
        .map(|j| costs[j] * (1.0 - data.labels[j] * model.labeled_decision[j]).max(0.0))
        .sum();
    let unl: f64 = model.unlabeled_decision.iter().map(|f| (1.0 - f.abs()).max(0.0)).sum();
    0.5 * wsq + lab + params.unlabeled_penalty * unl
}

/// Labeled clusters are uniform unless they hold both strictly positive and strictly
/// negative hinge arguments; boundary members join whichever side keeps them uniform.
fn labeled_split(members: &[usize], hinge: &[f64]) -> Option<(Vec<usize>, Vec<usize>)> {
    let any_pos = members.iter().any(|&j| hinge[j] > SIGN_TOLERANCE);
    let any_neg = members.iter().any(|&j| hinge[j] < -SIGN_TOLERANCE);
    if !(any_pos && any_neg) {
        return None;
    }
    Some(members.iter().partition(|&&j| hinge[j] > SIGN_TOLERANCE))
}

fn unlabeled_groups(members: &[usize], decision: &[f64], d: f64) -> [Vec<usize>; 4] {
    let mut groups: [Vec<usize>; 4] = Default::default();
    for &j in members {
        let slot = match classify_unlabeled(decision[j], Some(d)) {
            UnlabeledSet::PlusPlus => 0,
            UnlabeledSet::PlusMinus => 1,
            UnlabeledSet::MinusPlus => 2,
            UnlabeledSet::MinusMinus => 3,
        };
        groups[slot].push(j);
    }
    groups
}

fn labeled_hinge(model: &S3vmModel, data: &S3vmData<'_>) -> Vec<f64> {
    model.labeled_decision.iter().zip(&data.labels).map(|(f, y)| 1.0 - y * f).collect()
}

/// True when no labeled cluster straddles its margin and every unlabeled cluster lies in
/// one of the four sets, using the cluster labels of the aggregated solve.
pub fn check_optimality(
    labeled: &ClusterPartition,
    unlabeled: &ClusterPartition,
    model: &S3vmModel,
    data: &S3vmData<'_>,
) -> bool {
    let hinge = labeled_hinge(model, data);
    labeled.clusters().iter().all(|g| labeled_split(g, &hinge).is_none())
        && unlabeled.clusters().iter().enumerate().all(|(k, g)| {
            unlabeled_groups(g, &model.unlabeled_decision, model.cluster_d[k]).iter().any(|s| s.len() == g.len())
        })
}

/// Two-way splits of labeled clusters and four-way splits of unlabeled ones.
pub fn decluster(
    labeled: &mut ClusterPartition,
    unlabeled: &mut ClusterPartition,
    model: &S3vmModel,
    data: &S3vmData<'_>,
) -> Result<bool> {
    let hinge = labeled_hinge(model, data);
    let mut changed = false;
    for k in 0..labeled.num_clusters() {
        if let Some((plus, minus)) = labeled_split(labeled.members(k), &hinge) {
            labeled.split_cluster(k, vec![plus, minus])?;
            changed = true;
        }
    }
    for k in 0..unlabeled.num_clusters() {
        let size = unlabeled.members(k).len();
        let groups = unlabeled_groups(unlabeled.members(k), &model.unlabeled_decision, model.cluster_d[k]);
        if groups.iter().all(|g| g.len() < size) {
            unlabeled.split_cluster(k, groups.into())?;
            changed = true;
        }
    }
    Ok(changed)
}

/// Aggregated instance over both partitions.
pub struct S3vmAggregate {
    pub labeled: DenseMatrix,
    pub labels: Vec<f64>,
    pub labeled_costs: Vec<f64>,
    pub unlabeled: DenseMatrix,
    pub unlabeled_costs: Vec<f64>,
}

pub fn aggregate(
    labeled: &ClusterPartition,
    unlabeled: &ClusterPartition,
    data: &S3vmData<'_>,
    params: &S3vmParams,
) -> Result<S3vmAggregate> {
    let unit = data.labeled_unit_costs(params);
    let mut labels = Vec::with_capacity(labeled.num_clusters());
    let mut labeled_costs = Vec::with_capacity(labeled.num_clusters());
    for (k, g) in labeled.clusters().iter().enumerate() {
        let y = data.labels[g[0]];
        if g.iter().any(|&j| data.labels[j] != y) {
            return Err(AidError::InvalidInput(format!("labeled cluster {k} mixes labels")));
        }
        labels.push(y);
        labeled_costs.push(unit[g[0]] * g.len() as f64);
    }
    Ok(S3vmAggregate {
        labeled: clustering::centroids(data.x, labeled.clusters(), Some(&data.labeled)),
        labels,
        labeled_costs,
        unlabeled: clustering::centroids(data.x, unlabeled.clusters(), Some(&data.unlabeled)),
        unlabeled_costs: unlabeled.sizes().iter().map(|s| s * params.unlabeled_penalty).collect(),
    })
}

fn model_from_hyperplane(w: Vec<f64>, b: f64, cluster_d: Vec<f64>, data: &S3vmData<'_>) -> S3vmModel {
    let labeled_decision: Vec<f64> = data.labeled.par_iter().map(|&i| data.x.dot(i, &w) + b).collect();
    let unlabeled_decision: Vec<f64> = data.unlabeled.par_iter().map(|&i| data.x.dot(i, &w) + b).collect();
    let d = unlabeled_decision.iter().map(|&f| assign_label(f)).collect();
    S3vmModel { w, b, d, cluster_d, labeled_decision, unlabeled_decision }
}

pub struct S3vmAdapter<'a> {
    data: S3vmData<'a>,
    params: S3vmParams,
    constraint: Option<HyperplaneConstraint>,
    labeled: Option<ClusterPartition>,
    unlabeled: Option<ClusterPartition>,
}

impl<'a> S3vmAdapter<'a> {
    pub fn new(data: S3vmData<'a>, params: S3vmParams) -> Result<Self> {
        for (name, v) in [("labeled", params.labeled_penalty), ("unlabeled", params.unlabeled_penalty)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(AidError::Config(format!("{name} penalty must be positive, got {v}")));
            }
        }
        let (p, n) = data.class_counts();
        if p == 0 || n == 0 {
            return Err(AidError::InvalidInput("semi-supervised SVM needs labeled entries of both classes".into()));
        }
        let constraint = if params.balance == BalanceMode::Constraint { data.balance_constraint() } else { None };
        Ok(S3vmAdapter { data, params, constraint, labeled: None, unlabeled: None })
    }

    pub fn with_partitions(mut self, labeled: ClusterPartition, unlabeled: ClusterPartition) -> Self {
        self.labeled = Some(labeled);
        self.unlabeled = Some(unlabeled);
        self
    }

    pub fn data(&self) -> &S3vmData<'a> {
        &self.data
    }

    pub fn params(&self) -> &S3vmParams {
        &self.params
    }

    pub fn labeled_partition(&self) -> &ClusterPartition {
        self.labeled.as_ref().expect("adapter is initialized")
    }

    pub fn unlabeled_partition(&self) -> &ClusterPartition {
        self.unlabeled.as_ref().expect("adapter is initialized")
    }
}

impl Adapter for S3vmAdapter<'_> {
    type Model = S3vmModel;

    fn problem(&self) -> ProblemKind {
        ProblemKind::S3vm
    }

    fn num_entries(&self) -> usize {
        self.data.labeled.len() + self.data.unlabeled.len()
    }

    fn num_features(&self) -> usize {
        self.data.x.n_cols()
    }

    fn initialize(&mut self, k0: usize, seed: u64) -> Result<()> {
        if self.labeled.is_none() {
            let init = clustering::init_s3vm_clusters(
                self.data.x,
                &self.data.labeled,
                &self.data.labels,
                &self.data.unlabeled,
                k0,
                seed,
            )?;
            self.labeled = Some(init.labeled);
            self.unlabeled = Some(init.unlabeled);
        }
        Ok(())
    }

    fn num_clusters(&self) -> usize {
        self.labeled_partition().num_clusters() + self.unlabeled_partition().num_clusters()
    }

    fn solve(&mut self) -> Result<AggregatedSolve<S3vmModel>> {
        let agg = aggregate(self.labeled_partition(), self.unlabeled_partition(), &self.data, &self.params)?;
        let s = solve_s3vm_bnb(
            &BnbProblem {
                labeled: &agg.labeled,
                labels: &agg.labels,
                labeled_costs: &agg.labeled_costs,
                unlabeled: &agg.unlabeled,
                unlabeled_costs: &agg.unlabeled_costs,
                constraint: self.constraint.as_ref(),
            },
            &self.params.limits,
        )?;
        let model = model_from_hyperplane(s.w, s.b, s.d, &self.data);
        Ok(AggregatedSolve { model, objective: s.objective, exact: s.exact })
    }

    fn evaluate(&self, model: &S3vmModel) -> f64 {
        evaluate(model, &self.data, &self.params)
    }

    fn check_optimality(&self, model: &S3vmModel) -> bool {
        check_optimality(self.labeled_partition(), self.unlabeled_partition(), model, &self.data)
    }

    fn decluster(&mut self, model: &S3vmModel) -> Result<bool> {
        let (Some(l), Some(u)) = (self.labeled.as_mut(), self.unlabeled.as_mut()) else {
            return Err(AidError::Config("adapter is not initialized".into()));
        };
        decluster(l, u, model, &self.data)
    }
}

/// Branch and bound over every original entry.
pub fn solve_direct(data: &S3vmData<'_>, params: &S3vmParams) -> Result<(S3vmModel, f64, bool)> {
    let mut a = S3vmAdapter::new(data.clone(), params.clone())?.with_partitions(
        ClusterPartition::singletons(data.labeled.len()),
        ClusterPartition::singletons(data.unlabeled.len()),
    );
    let s = a.solve()?;
    let e = a.evaluate(&s.model);
    Ok((s.model, e, s.exact))
}
