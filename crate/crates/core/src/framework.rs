//! The generic aggregate / solve / check / decluster loop.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::clustering;
use crate::data::ProblemKind;
use crate::error::{AidError, Result};

/// When the loop is allowed to stop before certification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "iterations")]
pub enum Mode {
    ToOptimality,
    /// Stop once the iteration index reaches this value, ignoring the gap.
    FixedIterations(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AidConfig {
    /// Fraction of entries used as initial clusters; `None` picks the problem default.
    pub initial_rate: Option<f64>,
    pub gap_tolerance: f64,
    pub max_iterations: usize,
    /// Seconds.
    pub time_limit: Option<f64>,
    pub rng_seed: u64,
    pub mode: Mode,
}

pub const DEFAULT_MAX_ITERATIONS: usize = 100;

impl AidConfig {
    /// Defaults for a problem type: gap tolerance 1e-3 for LAD, 1e-4 for SVM, none for S3VM.
    pub fn for_problem(kind: ProblemKind) -> Self {
        let gap_tolerance = match kind {
            ProblemKind::Lad => 1e-3,
            ProblemKind::Svm => 1e-4,
            ProblemKind::S3vm => 0.0,
        };
        AidConfig {
            initial_rate: None,
            gap_tolerance,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            time_limit: None,
            rng_seed: 0,
            mode: Mode::ToOptimality,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_rate(mut self, rate: f64) -> Self {
        self.initial_rate = Some(rate);
        self
    }

    pub fn with_gap_tolerance(mut self, tol: f64) -> Self {
        self.gap_tolerance = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.initial_rate {
            if !(r > 0.0 && r <= 1.0) {
                return Err(AidError::Config(format!("initial rate must be in (0, 1], got {r}")));
            }
        }
        if !(self.gap_tolerance >= 0.0) {
            return Err(AidError::Config("gap tolerance must be nonnegative".into()));
        }
        if self.max_iterations == 0 {
            return Err(AidError::Config("max iterations must be at least 1".into()));
        }
        if let Some(tl) = self.time_limit {
            if !(tl > 0.0) {
                return Err(AidError::Config("time limit must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminationReason {
    OptimalityCondition,
    GapTolerance,
    MaxIterations,
    TimeLimit,
    SingletonClusters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: usize,
    pub num_clusters: usize,
    pub rate: f64,
    /// Aggregated objective.
    pub f: f64,
    /// Objective of the disaggregated solution on the original data.
    pub e: f64,
    pub e_best: f64,
    /// `None` where no bound is available; infinite values serialize as null.
    pub gap: Option<f64>,
    pub optimal: bool,
    /// False when the aggregated solve stopped at a limit.
    pub exact: bool,
    pub solve_time: f64,
    pub evaluate_time: f64,
    pub decluster_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub problem: ProblemKind,
    pub n: usize,
    pub config: AidConfig,
    pub initial_clusters: usize,
    pub init_time: f64,
    pub records: Vec<IterationRecord>,
    pub termination: TerminationReason,
    pub total_time: f64,
}

impl RunLog {
    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("a run log has at least one record")
    }

    /// Index of the final iteration.
    pub fn iterations(&self) -> usize {
        self.last().t
    }
}

pub struct AidRun<M> {
    pub log: RunLog,
    /// Disaggregated solution of the last iteration.
    pub model: M,
}

/// Result of one aggregated solve.
pub struct AggregatedSolve<M> {
    /// Solution mapped back to the original entries.
    pub model: M,
    pub objective: f64,
    pub exact: bool,
}

/// Problem-specific pieces of the loop.
pub trait Adapter {
    type Model: Clone;

    fn problem(&self) -> ProblemKind;
    fn num_entries(&self) -> usize;
    fn num_features(&self) -> usize;
    /// Smallest admissible initial cluster count.
    fn min_clusters(&self) -> usize {
        clustering::min_clusters(self.num_features(), self.problem())
    }
    /// Cluster count used when no rate is configured.
    fn default_initial_clusters(&self) -> Result<usize> {
        clustering::initial_cluster_count(self.num_entries(), self.num_features(), self.problem())
    }
    fn initialize(&mut self, k0: usize, seed: u64) -> Result<()>;
    fn num_clusters(&self) -> usize;
    fn all_singletons(&self) -> bool {
        self.num_clusters() == self.num_entries()
    }
    fn solve(&mut self) -> Result<AggregatedSolve<Self::Model>>;
    fn evaluate(&self, model: &Self::Model) -> f64;
    fn check_optimality(&self, model: &Self::Model) -> bool;
    /// Split violating clusters; returns whether anything changed.
    fn decluster(&mut self, model: &Self::Model) -> Result<bool>;
    /// Whether the aggregated objective bounds the optimum from below.
    fn has_lower_bound(&self) -> bool {
        self.problem() != ProblemKind::S3vm
    }
}

/// `(E_best − F)/E_best`, clamped at zero. With `E_best = 0` the gap is 0 if `F = 0` and
/// infinite otherwise.
pub fn compute_gap(e_best: f64, f: f64) -> f64 {
    if e_best > 0.0 {
        ((e_best - f) / e_best).max(0.0)
    } else if f == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// First stopping rule that fires for a finished iteration, if any.
pub fn check_termination(
    record: &IterationRecord,
    config: &AidConfig,
    all_singletons: bool,
    elapsed: Duration,
) -> Option<TerminationReason> {
    if record.optimal {
        return Some(TerminationReason::OptimalityCondition);
    }
    let cap = match config.mode {
        Mode::ToOptimality => {
            if record.gap.is_some_and(|g| g <= config.gap_tolerance) {
                return Some(TerminationReason::GapTolerance);
            }
            config.max_iterations
        }
        Mode::FixedIterations(k) => k.min(config.max_iterations),
    };
    if record.t >= cap {
        return Some(TerminationReason::MaxIterations);
    }
    if config.time_limit.is_some_and(|tl| elapsed.as_secs_f64() >= tl) {
        return Some(TerminationReason::TimeLimit);
    }
    if all_singletons {
        return Some(TerminationReason::SingletonClusters);
    }
    None
}

/// Initial cluster count for a config, checked against the adapter minimum.
pub fn initial_clusters<A: Adapter>(adapter: &A, config: &AidConfig) -> Result<usize> {
    let n = adapter.num_entries();
    match config.initial_rate {
        None => adapter.default_initial_clusters(),
        Some(rate) => {
            let k = clustering::clusters_for_rate(n, rate).min(n);
            let min = adapter.min_clusters();
            if k < min {
                return Err(AidError::Config(format!(
                    "initial rate {rate} gives {k} clusters, below the minimum of {min}"
                )));
            }
            Ok(k)
        }
    }
}

/// Run the loop. `observer` sees every finished iteration before declustering.
pub fn run_aid<A, O>(adapter: &mut A, config: &AidConfig, mut observer: O) -> Result<AidRun<A::Model>>
where
    A: Adapter,
    O: FnMut(&IterationRecord, &A, &A::Model),
{
    config.validate()?;
    if adapter.num_entries() == 0 {
        return Err(AidError::InvalidInput("dataset is empty".into()));
    }
    let start = Instant::now();
    let k0 = initial_clusters(adapter, config)?;
    adapter.initialize(k0, config.rng_seed)?;
    let init_time = start.elapsed().as_secs_f64();
    let n = adapter.num_entries();

    let mut records = Vec::new();
    let mut e_best = f64::INFINITY;
    let mut t = 0;
    loop {
        let clock = Instant::now();
        let solved = adapter.solve()?;
        let solve_time = clock.elapsed().as_secs_f64();

        let clock = Instant::now();
        let e = adapter.evaluate(&solved.model);
        let optimal = solved.exact && adapter.check_optimality(&solved.model);
        let evaluate_time = clock.elapsed().as_secs_f64();
        e_best = e_best.min(e);

        let num_clusters = adapter.num_clusters();
        let mut record = IterationRecord {
            t,
            num_clusters,
            rate: num_clusters as f64 / n as f64,
            f: solved.objective,
            e,
            e_best,
            gap: adapter.has_lower_bound().then(|| compute_gap(e_best, solved.objective)),
            optimal,
            exact: solved.exact,
            solve_time,
            evaluate_time,
            decluster_time: 0.0,
        };
        observer(&record, adapter, &solved.model);

        let reason = check_termination(&record, config, adapter.all_singletons(), start.elapsed());
        if let Some(termination) = reason {
            records.push(record);
            return Ok(AidRun {
                log: RunLog {
                    problem: adapter.problem(),
                    n,
                    config: config.clone(),
                    initial_clusters: k0,
                    init_time,
                    records,
                    termination,
                    total_time: start.elapsed().as_secs_f64(),
                },
                model: solved.model,
            });
        }

        let clock = Instant::now();
        let changed = adapter.decluster(&solved.model)?;
        record.decluster_time = clock.elapsed().as_secs_f64();
        records.push(record);
        if !changed {
            return Err(AidError::Numerical(format!(
                "iteration {t}: optimality condition fails but no cluster could be split"
            )));
        }
        t += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(t: usize, gap: Option<f64>, optimal: bool) -> IterationRecord {
        IterationRecord {
            t,
            num_clusters: 1,
            rate: 0.1,
            f: 0.0,
            e: 0.0,
            e_best: 0.0,
            gap,
            optimal,
            exact: true,
            solve_time: 0.0,
            evaluate_time: 0.0,
            decluster_time: 0.0,
        }
    }

    #[test]
    fn gap_examples() {
        assert!((compute_gap(100.0, 90.0) - 0.1).abs() < 1e-15);
        assert_eq!(compute_gap(100.0, 100.0), 0.0);
        assert_eq!(compute_gap(0.0, 0.0), 0.0);
        assert_eq!(compute_gap(100.0, 100.0 + 1e-12), 0.0);
        assert!(compute_gap(0.0, -1e-300).is_infinite());
    }

    #[test]
    fn termination_examples() {
        let cfg = AidConfig::for_problem(ProblemKind::Lad);
        let now = Duration::ZERO;
        assert_eq!(check_termination(&record(3, Some(5e-4), false), &cfg, false, now), Some(TerminationReason::GapTolerance));
        assert_eq!(check_termination(&record(0, Some(1.0), true), &cfg, false, now), Some(TerminationReason::OptimalityCondition));
        assert_eq!(check_termination(&record(0, Some(1.0), false), &cfg, false, now), None);
        assert_eq!(check_termination(&record(100, Some(1.0), false), &cfg, false, now), Some(TerminationReason::MaxIterations));
        assert_eq!(check_termination(&record(2, Some(1.0), false), &cfg, true, now), Some(TerminationReason::SingletonClusters));

        let fixed = AidConfig { mode: Mode::FixedIterations(1), ..AidConfig::for_problem(ProblemKind::S3vm) };
        assert_eq!(check_termination(&record(0, None, false), &fixed, false, now), None);
        assert_eq!(check_termination(&record(1, None, false), &fixed, false, now), Some(TerminationReason::MaxIterations));
        // The gap is ignored in fixed-iteration mode.
        let fixed_lad = AidConfig { mode: Mode::FixedIterations(5), ..cfg.clone() };
        assert_eq!(check_termination(&record(1, Some(0.0), false), &fixed_lad, false, now), None);

        let timed = AidConfig { time_limit: Some(1.0), ..cfg };
        assert_eq!(
            check_termination(&record(1, Some(1.0), false), &timed, false, Duration::from_secs(2)),
            Some(TerminationReason::TimeLimit)
        );
    }

    #[test]
    fn config_validation() {
        let mut c = AidConfig::for_problem(ProblemKind::Svm);
        assert!(c.validate().is_ok());
        c.initial_rate = Some(0.0);
        assert!(c.validate().is_err());
        c.initial_rate = Some(1.0);
        c.max_iterations = 0;
        assert!(c.validate().is_err());
    }
}
