use serde::{Deserialize, Serialize};

use super::kernel::{KernelMatrix, LinearKernel};
use super::qp::{solve_box_qp, BoxQp, QpOptions};
use crate::data::{DenseMatrix, Features};
use crate::error::{AidError, Result};

/// Entity representation handed to the SVM solver.
#[derive(Clone, Copy)]
pub enum SvmInput<'a> {
    /// Feature rows with the linear kernel; the solution carries `w`.
    Linear(&'a Features),
    /// Any precomputed or implicit kernel matrix.
    Kernel(&'a dyn KernelMatrix),
}

impl SvmInput<'_> {
    fn size(&self) -> usize {
        match self {
            SvmInput::Linear(f) => f.n_rows(),
            SvmInput::Kernel(k) => k.size(),
        }
    }
}

/// Soft-margin SVM where entity `k` has slack cost `weight_k · penalty`.
#[derive(Clone, Copy)]
pub struct WeightedSvmInstance<'a> {
    pub input: SvmInput<'a>,
    pub labels: &'a [f64],
    pub weights: &'a [f64],
    pub penalty: f64,
}

/// Linear equality `w·point + b = target` imposed on the hyperplane.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperplaneConstraint {
    pub point: Vec<f64>,
    pub target: f64,
}

/// General form used by the semi-supervised solver: explicit per-entity slack costs and an
/// optional hyperplane equality. Only the linear input supports the equality.
#[derive(Clone, Copy)]
pub struct SvmProblem<'a> {
    pub input: SvmInput<'a>,
    pub labels: &'a [f64],
    pub costs: &'a [f64],
    pub constraint: Option<&'a HyperplaneConstraint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub b: f64,
    /// Dual objective `Σ α_k − ½‖w‖²` (plus the constraint term when present).
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct SvmSolution {
    pub dual: DualSolution,
    /// Present for linear input.
    pub w: Option<Vec<f64>>,
    pub b: f64,
    /// `w·φ(x_k)` without the bias.
    pub scores: Vec<f64>,
    pub xi: Vec<f64>,
    /// Primal objective `½‖w‖² + Σ cost_k ξ_k`.
    pub objective: f64,
    pub w_norm_sq: f64,
    pub kkt_violation: f64,
    pub iterations: usize,
}

pub fn solve_weighted_svm(inst: &WeightedSvmInstance<'_>) -> Result<SvmSolution> {
    solve_weighted_svm_with(inst, &QpOptions::default())
}

pub fn solve_weighted_svm_with(inst: &WeightedSvmInstance<'_>, opts: &QpOptions) -> Result<SvmSolution> {
    if !(inst.penalty > 0.0) || !inst.penalty.is_finite() {
        return Err(AidError::InvalidInput("SVM penalty must be positive".into()));
    }
    if inst.weights.len() != inst.labels.len() {
        return Err(AidError::InvalidInput("SVM weights and labels differ in length".into()));
    }
    if inst.weights.iter().any(|&w| !(w > 0.0)) {
        return Err(AidError::InvalidInput("SVM weights must be positive".into()));
    }
    let costs: Vec<f64> = inst.weights.iter().map(|w| w * inst.penalty).collect();
    solve_svm_with(&SvmProblem { input: inst.input, labels: inst.labels, costs: &costs, constraint: None }, opts)
}

pub fn solve_svm(problem: &SvmProblem<'_>) -> Result<SvmSolution> {
    solve_svm_with(problem, &QpOptions::default())
}

pub fn solve_svm_with(problem: &SvmProblem<'_>, opts: &QpOptions) -> Result<SvmSolution> {
    let k = problem.input.size();
    if problem.labels.len() != k || problem.costs.len() != k {
        return Err(AidError::InvalidInput("SVM dimensions are inconsistent".into()));
    }
    if problem.labels.iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(AidError::InvalidInput("SVM labels must be -1 or +1".into()));
    }
    if problem.costs.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
        return Err(AidError::InvalidInput("SVM slack costs must be finite and nonnegative".into()));
    }
    let has = |s: f64| problem.labels.iter().zip(problem.costs).any(|(&y, &c)| y == s && c > 0.0);
    if problem.constraint.is_none() && !(has(1.0) && has(-1.0)) {
        return Err(AidError::InvalidInput("SVM needs both labels among entities with positive weight".into()));
    }

    match (problem.input, problem.constraint) {
        (SvmInput::Linear(rows), None) => {
            let kernel = LinearKernel::new(rows);
            solve_inner(&kernel, Some(rows), problem.labels, problem.costs, None, opts)
        }
        (SvmInput::Linear(rows), Some(con)) => {
            if con.point.len() != rows.n_cols() {
                return Err(AidError::InvalidInput("constraint point has the wrong dimension".into()));
            }
            // The equality enters the dual as one extra free variable attached to the
            // constraint point, with label +1 and linear coefficient `target`.
            let dense = rows.to_dense();
            let mut data = dense.as_slice().to_vec();
            data.extend_from_slice(&con.point);
            let aug = Features::Dense(DenseMatrix::new(k + 1, rows.n_cols(), data)?);
            let kernel = LinearKernel::new(&aug);
            let mut labels = problem.labels.to_vec();
            labels.push(1.0);
            let mut costs = problem.costs.to_vec();
            costs.push(0.0);
            let mut sol = solve_inner(&kernel, Some(&aug), &labels, &costs, Some(con.target), opts)?;
            sol.dual.alpha.truncate(k);
            sol.scores.truncate(k);
            sol.xi.truncate(k);
            Ok(sol)
        }
        (SvmInput::Kernel(kernel), None) => solve_inner(kernel, None, problem.labels, problem.costs, None, opts),
        (SvmInput::Kernel(_), Some(_)) => Err(AidError::InvalidInput(
            "hyperplane constraints are only supported with linear input".into(),
        )),
    }
}

/// `constraint_target` marks the last entity as the free constraint variable.
fn solve_inner(
    kernel: &dyn KernelMatrix,
    rows: Option<&Features>,
    labels: &[f64],
    costs: &[f64],
    constraint_target: Option<f64>,
    opts: &QpOptions,
) -> Result<SvmSolution> {
    let n = labels.len();
    let mut lo = vec![0.0; n];
    let mut hi = costs.to_vec();
    let mut p = vec![1.0; n];
    let hinge_count = if let Some(target) = constraint_target {
        lo[n - 1] = f64::NEG_INFINITY;
        hi[n - 1] = f64::INFINITY;
        p[n - 1] = target;
        n - 1
    } else {
        n
    };
    let qp = solve_box_qp(&BoxQp { kernel, y: labels, lo: &lo, hi: &hi, p: &p }, opts)?;

    let coef: Vec<f64> = qp.alpha.iter().zip(labels).map(|(a, y)| a * y).collect();
    let (w, scores, w_norm_sq) = match rows {
        Some(r) => {
            let lk = LinearKernel::new(r);
            let w = lk.weight_vector(&coef);
            let scores: Vec<f64> = (0..n).map(|t| r.dot(t, &w)).collect();
            let nsq = w.iter().map(|v| v * v).sum();
            (Some(w), scores, nsq)
        }
        None => {
            let scores: Vec<f64> = (0..n).map(|t| labels[t] * (qp.gradient[t] + p[t])).collect();
            let nsq = coef.iter().zip(&scores).map(|(c, s)| c * s).sum::<f64>().max(0.0);
            (None, scores, nsq)
        }
    };

    let b = if constraint_target.is_some() {
        qp.bias
    } else {
        let (blo, bhi) = optimal_bias_interval(&scores[..hinge_count], &labels[..hinge_count], &costs[..hinge_count]);
        if qp.has_free {
            qp.bias.clamp(blo, bhi)
        } else {
            match (blo.is_finite(), bhi.is_finite()) {
                (true, true) => 0.5 * (blo + bhi),
                (true, false) => blo,
                (false, true) => bhi,
                (false, false) => qp.bias,
            }
        }
    };

    let xi: Vec<f64> = (0..n)
        .map(|t| if t < hinge_count { (1.0 - labels[t] * (scores[t] + b)).max(0.0) } else { 0.0 })
        .collect();
    let objective = 0.5 * w_norm_sq + (0..hinge_count).map(|t| costs[t] * xi[t]).sum::<f64>();
    let dual_objective = qp.alpha.iter().zip(&p).map(|(a, p)| a * p).sum::<f64>() - 0.5 * w_norm_sq;
    Ok(SvmSolution {
        dual: DualSolution { alpha: qp.alpha, b, objective: dual_objective },
        w,
        b,
        scores,
        xi,
        objective,
        w_norm_sq,
        kkt_violation: qp.violation,
        iterations: qp.iterations,
    })
}

/// Interval of biases minimizing `Σ c_k max(0, 1 − y_k(s_k + b))` for fixed scores.
pub fn optimal_bias_interval(scores: &[f64], labels: &[f64], costs: &[f64]) -> (f64, f64) {
    // Each term is convex piecewise linear in b with one kink; the slope rises by c_k there.
    let mut kinks: Vec<(f64, f64)> = scores
        .iter()
        .zip(labels)
        .zip(costs)
        .filter(|(_, &c)| c > 0.0)
        .map(|((&s, &y), &c)| (y - s, c))
        .collect();
    kinks.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = kinks.iter().map(|k| k.1).sum();
    let mut slope: f64 = -labels.iter().zip(costs).filter(|(&y, _)| y > 0.0).map(|(_, &c)| c).sum::<f64>();
    let zero = 1e-12 * total.max(1e-300);
    if slope >= -zero {
        return (f64::NEG_INFINITY, kinks.first().map_or(f64::INFINITY, |k| k.0));
    }
    let mut i = 0;
    while i < kinks.len() {
        let at = kinks[i].0;
        while i < kinks.len() && kinks[i].0 == at {
            slope += kinks[i].1;
            i += 1;
        }
        if slope > zero {
            return (at, at);
        }
        if slope >= -zero {
            let next = kinks.get(i).map_or(f64::INFINITY, |k| k.0);
            return (at, next);
        }
    }
    (kinks.last().map_or(f64::NEG_INFINITY, |k| k.0), f64::INFINITY)
}
