use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{debug, info};
use serde::Serialize;

use aid_core::data::{
    config_digest, generate, load_csv, load_svmlight, save_model, CsvOptions, ModelMetadata, ModelParams, SavedModel,
    TargetKind,
};
use aid_core::metrics::{rate_split, Metrics, RateSplit};
use aid_core::subsolvers::KernelKind;
use aid_core::{
    lad, run_aid, s3vm, svm, AidConfig, AidError, Dataset, IterationRecord, LadAdapter, Mode, ProblemKind, RunLog,
    S3vmAdapter, S3vmData, S3vmParams, SvmAdapter, SyntheticSpec, TerminationReason,
};

use crate::args::{Problem, RunArgs};

#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }

    pub fn exit_code(&self) -> u8 {
        self.code
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<AidError> for CliError {
    fn from(e: AidError) -> Self {
        let code = if e.is_data_error() {
            3
        } else if e.is_solver_error() {
            4
        } else {
            2
        };
        CliError { code, message: e.to_string() }
    }
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError { code: 3, message: format!("{}: {e}", path.display()) }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Source {
    File { path: PathBuf },
    Synthetic { spec: SyntheticSpec },
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
enum ProblemParams {
    Lad,
    Svm { penalty: f64, kernel: KernelKind },
    S3vm(S3vmParams),
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, Serialize)]
struct RunSpec {
    problem: ProblemKind,
    source: Source,
    intercept: bool,
    config: AidConfig,
    params: ProblemParams,
}

#[derive(Serialize)]
struct Header<'a> {
    n: usize,
    m: usize,
    seed: u64,
    config_digest: &'a str,
    spec: &'a RunSpec,
}

#[derive(Serialize)]
struct Summary {
    termination: TerminationReason,
    iterations: usize,
    initial_clusters: usize,
    final_clusters: usize,
    final_rate: f64,
    objective: f64,
    aggregated_objective: f64,
    gap: Option<f64>,
    init_time: f64,
    total_time: f64,
    training_accuracy: Option<f64>,
    metrics: Option<Metrics>,
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum LogLine<'a> {
    Header(Header<'a>),
    Iteration(&'a IterationRecord),
    Summary(&'a Summary),
}

struct DirectSolve {
    objective: f64,
    seconds: f64,
    accuracy: Option<f64>,
}

struct Outcome {
    log: RunLog,
    params: ModelParams,
    accuracy: Option<f64>,
    direct: Option<DirectSolve>,
    rates: Vec<(usize, RateSplit)>,
}

impl Outcome {
    fn metrics(&self) -> Option<Metrics> {
        let d = self.direct.as_ref()?;
        let last = self.log.last();
        let gamma = match (self.accuracy, d.accuracy) {
            (Some(a), Some(b)) => Some(a - b),
            _ => None,
        };
        Some(Metrics::new(last.e, d.objective, self.log.total_time, d.seconds, last.rate, self.log.iterations(), gamma))
    }
}

fn target_kind(problem: Problem) -> TargetKind {
    match problem {
        Problem::Lad => TargetKind::Response,
        Problem::Svm => TargetKind::Labels,
        Problem::S3vm => TargetKind::Partial,
    }
}

fn load(problem: Problem, a: &RunArgs) -> CliResult<(Dataset, Source)> {
    let (ds, source) = match &a.input {
        Some(path) => {
            let kind = target_kind(problem);
            let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
            if !is_csv && a.target_column.is_some() {
                return Err(CliError::usage("--target-column applies to CSV input only"));
            }
            let loaded = if is_csv {
                load_csv(path, &CsvOptions { target_column: a.target_column.clone(), kind })
            } else {
                load_svmlight(path, kind)
            };
            let ds = loaded.map_err(|e| match e {
                AidError::Io(io) => io_error(path, io),
                e => e.into(),
            })?;
            (ds, Source::File { path: path.clone() })
        }
        None => {
            let spec = match problem {
                Problem::Lad => SyntheticSpec::lad(a.n, a.m, a.seed),
                Problem::Svm => SyntheticSpec::svm(a.n, a.m, a.seed),
                Problem::S3vm => SyntheticSpec::s3vm(a.n, a.m, a.labeled_fraction, a.seed),
            };
            (generate(&spec).map_err(|e| CliError::usage(e.to_string()))?, Source::Synthetic { spec })
        }
    };
    let ds = if a.intercept { ds.with_intercept() } else { ds };
    Ok((ds, source))
}

fn aid_config(problem: Problem, a: &RunArgs) -> AidConfig {
    let mut cfg = AidConfig::for_problem(problem.into()).with_seed(a.seed);
    cfg.initial_rate = a.r0;
    if let Some(tol) = a.tol {
        cfg.gap_tolerance = tol;
    }
    if let Some(max) = a.max_iter {
        cfg.max_iterations = max;
    }
    cfg.time_limit = a.time_limit;
    if let Some(k) = a.iterations {
        cfg.mode = Mode::FixedIterations(k);
    }
    cfg
}

fn s3vm_params(a: &RunArgs) -> S3vmParams {
    S3vmParams {
        labeled_penalty: a.labeled_penalty,
        unlabeled_penalty: a.unlabeled_penalty,
        balance: a.balance,
        balance_cost_swapped: a.balance_cost_swapped,
        ..S3vmParams::default()
    }
}

fn problem_params(problem: Problem, a: &RunArgs) -> ProblemParams {
    match problem {
        Problem::Lad => ProblemParams::Lad,
        Problem::Svm => ProblemParams::Svm { penalty: a.penalty, kernel: a.kernel },
        Problem::S3vm => ProblemParams::S3vm(s3vm_params(a)),
    }
}

fn progress(rec: &IterationRecord) {
    info!(
        "t={} clusters={} rate={:.5} F={:.6e} E={:.6e} gap={:?} optimal={}",
        rec.t, rec.num_clusters, rec.rate, rec.f, rec.e, rec.gap, rec.optimal
    );
}

fn timed<T>(f: impl FnOnce() -> aid_core::Result<T>) -> aid_core::Result<(T, f64)> {
    let start = Instant::now();
    let v = f()?;
    Ok((v, start.elapsed().as_secs_f64()))
}

fn execute(problem: Problem, ds: &Dataset, a: &RunArgs, cfg: &AidConfig, oracle: bool, rates: bool) -> CliResult<Outcome> {
    let x = &ds.features;
    let mut trail = Vec::new();
    match problem {
        Problem::Lad => {
            let y = ds.response()?;
            let mut adapter = LadAdapter::new(x, y)?;
            let run = run_aid(&mut adapter, cfg, |rec, ad, model| {
                progress(rec);
                if rates {
                    let r: Vec<f64> = (0..y.len()).map(|i| model.residual(x, y, i)).collect();
                    trail.push((rec.t, rate_split(ad.partition().clusters(), &r)));
                }
            })?;
            let direct = if oracle {
                let ((model, _), seconds) = timed(|| lad::solve_direct(x, y))?;
                // Scored like the AID iterate so a singleton start gives delta = 0.
                Some(DirectSolve { objective: lad::evaluate(&model, x, y), seconds, accuracy: None })
            } else {
                None
            };
            let params = ModelParams::Lad { beta: run.model.beta.clone() };
            Ok(Outcome { log: run.log, params, accuracy: None, direct, rates: trail })
        }
        Problem::Svm => {
            let y = ds.labels()?;
            let mut adapter = SvmAdapter::new(x, y, a.penalty, a.kernel)?;
            let run = run_aid(&mut adapter, cfg, |rec, ad, model| {
                progress(rec);
                if rates {
                    trail.push((rec.t, rate_split(ad.partition().clusters(), &model.decision)));
                }
            })?;
            let direct = if oracle {
                let (m, seconds) = timed(|| svm::solve_direct(x, y, a.penalty, a.kernel))?;
                Some(DirectSolve { objective: m.objective, seconds, accuracy: Some(m.training_accuracy(y)) })
            } else {
                None
            };
            let accuracy = Some(run.model.training_accuracy(y));
            let params = run.model.params(x, y, a.kernel);
            Ok(Outcome { log: run.log, params, accuracy, direct, rates: trail })
        }
        Problem::S3vm => {
            if rates {
                return Err(CliError::usage("diagnose-rates supports lad and svm"));
            }
            let data = S3vmData::new(x, ds.partial_labels()?)?;
            let params = s3vm_params(a);
            let mut adapter = S3vmAdapter::new(data.clone(), params.clone())?;
            let run = run_aid(&mut adapter, cfg, |rec, _, _| progress(rec))?;
            let direct = if oracle {
                let ((m, _, exact), seconds) = timed(|| s3vm::solve_direct(&data, &params))?;
                let objective = s3vm::evaluate(&m, &data, &params);
                if !exact {
                    log::warn!("direct S3VM solve stopped at a search limit");
                }
                let accuracy = Some(svm::classification_rate(&m.labeled_decision, &data.labels));
                Some(DirectSolve { objective, seconds, accuracy })
            } else {
                None
            };
            let accuracy = Some(svm::classification_rate(&run.model.labeled_decision, &data.labels));
            Ok(Outcome { log: run.log, params: run.model.params(), accuracy, direct, rates: trail })
        }
    }
}

fn open(path: &Path) -> CliResult<Box<dyn Write>> {
    let f = File::create(path).map_err(|e| io_error(path, e))?;
    Ok(Box::new(BufWriter::new(f)))
}

fn write_line(out: &mut dyn Write, line: &LogLine<'_>) -> io::Result<()> {
    serde_json::to_writer(&mut *out, line)?;
    out.write_all(b"\n")
}

/// Run one problem end to end and return the outcome.
fn session(
    problem: Problem,
    a: &RunArgs,
    oracle: bool,
    rates: bool,
    log_out: Option<(Box<dyn Write>, PathBuf)>,
) -> CliResult<Outcome> {
    let (ds, source) = load(problem, a)?;
    let cfg = aid_config(problem, a);
    cfg.validate()?;
    let spec = RunSpec { problem: problem.into(), source, intercept: ds.intercept, config: cfg.clone(), params: problem_params(problem, a) };
    let digest = config_digest(&spec);
    debug!("config digest {digest}");

    let mut log_out = log_out;
    let header = LogLine::Header(Header { n: ds.n(), m: ds.m(), seed: a.seed, config_digest: &digest, spec: &spec });
    if let Some((out, path)) = log_out.as_mut() {
        write_line(out.as_mut(), &header).and_then(|_| out.flush()).map_err(|e| io_error(path, e))?;
    }

    let outcome = execute(problem, &ds, a, &cfg, oracle, rates)?;
    let last = outcome.log.last();
    let summary = Summary {
        termination: outcome.log.termination,
        iterations: outcome.log.iterations(),
        initial_clusters: outcome.log.initial_clusters,
        final_clusters: last.num_clusters,
        final_rate: last.rate,
        objective: last.e,
        aggregated_objective: last.f,
        gap: last.gap,
        init_time: outcome.log.init_time,
        total_time: outcome.log.total_time,
        training_accuracy: outcome.accuracy,
        metrics: outcome.metrics(),
    };
    if let Some((out, path)) = log_out.as_mut() {
        let write = |out: &mut dyn Write| -> io::Result<()> {
            for rec in &outcome.log.records {
                write_line(out, &LogLine::Iteration(rec))?;
            }
            write_line(out, &LogLine::Summary(&summary))?;
            out.flush()
        };
        write(out.as_mut()).map_err(|e| io_error(path, e))?;
    }
    info!("{:?} after {} iterations, E = {:.6e}", summary.termination, summary.iterations, summary.objective);

    if let Some(path) = &a.model {
        let meta = ModelMetadata { seed: a.seed, config_digest: digest, objective: last.e, iterations: summary.iterations };
        save_model(&SavedModel::new(ds.m(), outcome.params.clone(), meta), path)?;
    }
    Ok(outcome)
}

fn log_target(a: &RunArgs, default_stdout: bool) -> CliResult<Option<(Box<dyn Write>, PathBuf)>> {
    match &a.log {
        Some(path) => Ok(Some((open(path)?, path.clone()))),
        None if default_stdout => Ok(Some((Box::new(io::stdout().lock()), PathBuf::from("<stdout>")))),
        None => Ok(None),
    }
}

pub fn run(problem: Problem, a: &RunArgs) -> CliResult<()> {
    session(problem, a, a.oracle, false, log_target(a, true)?).map(|_| ())
}

pub fn compare(problem: Problem, a: &RunArgs) -> CliResult<()> {
    let outcome = session(problem, a, true, false, log_target(a, false)?)?;
    let metrics = outcome.metrics().expect("direct solve ran");
    let text = serde_json::to_string_pretty(&metrics).expect("metrics serialize");
    println!("{text}");
    Ok(())
}

pub fn diagnose_rates(problem: Problem, out: Option<&Path>, a: &RunArgs) -> CliResult<()> {
    if problem == Problem::S3vm {
        return Err(CliError::usage("diagnose-rates supports lad and svm"));
    }
    let outcome = session(problem, a, a.oracle, true, log_target(a, false)?)?;
    let (mut sink, name): (Box<dyn Write>, PathBuf) = match out {
        Some(p) => (open(p)?, p.to_path_buf()),
        None => (Box::new(io::stdout().lock()), PathBuf::from("<stdout>")),
    };
    write_rates(sink.as_mut(), &outcome).map_err(|e| io_error(&name, e))
}

fn write_rates(out: &mut dyn Write, outcome: &Outcome) -> io::Result<()> {
    writeln!(out, "t,num_clusters,rate,near_entries,far_entries,near_clusters,far_clusters,near_rate,far_rate")?;
    for ((t, s), rec) in outcome.rates.iter().zip(&outcome.log.records) {
        writeln!(
            out,
            "{t},{},{},{},{},{},{},{},{}",
            rec.num_clusters,
            rec.rate,
            s.near_entries,
            s.far_entries,
            s.near_clusters,
            s.far_clusters,
            s.near_rate,
            s.far_rate
        )?;
    }
    out.flush()
}
