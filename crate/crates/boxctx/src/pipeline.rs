//! Experiment runs with fold-level parallelism and their output files.

use std::fs;
use std::path::{Path, PathBuf};

use boxctx_core::classify::ClassifierSpec;
use boxctx_core::classify::TrainedModel;
use boxctx_core::context::Binding;
use boxctx_core::evaluation::{
    classifier_for_fold, summarize, EvaluationError, Experiment, FoldReport, MetricsRow, MetricsSummary,
};
use boxctx_core::optimizer::{SearchMethod, SearchResult};
use boxctx_core::runtime::{train_ensemble, ContextEnsemble};
use boxctx_core::signal::{segment, SignalError, SignalSet};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::RunConfig;
use crate::io::{self, IoError};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "BOXCTX_WORKERS";

pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const FOLDS_FILE: &str = "folds.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRACE_DIR: &str = "traces";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("{WORKERS_ENV}={0:?} is not a positive integer")]
    Workers(String),
    #[error("no classifiers configured")]
    NoClassifiers,
}

/// Worker count from the environment; `None` lets rayon decide.
pub fn workers_from_env() -> Result<Option<usize>, RunError> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(RunError::Workers(v)),
        },
    }
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool, RunError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        b = b.num_threads(n);
    }
    Ok(b.build()?)
}

/// Every (classifier, fold) pair, evaluated in parallel; the result order is
/// classifier-major and independent of the worker count.
pub fn run_folds(
    exp: &Experiment,
    specs: &[ClassifierSpec],
    workers: Option<usize>,
) -> Result<Vec<FoldReport>, RunError> {
    let jobs: Vec<(&ClassifierSpec, usize)> = specs
        .iter()
        .flat_map(|s| (0..exp.config().folds).map(move |f| (s, f)))
        .collect();
    let out = pool(workers)?.install(|| {
        jobs.par_iter()
            .map(|&(spec, fold)| exp.run_spec_fold(spec, fold))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub config: RunConfig,
    pub records: usize,
    pub feasible_size: usize,
    pub search: SearchMethod,
    pub outputs: Vec<String>,
}

pub fn config_hash(cfg: &RunConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    format!("{:x}", Sha256::digest(bytes))
}

pub struct RunOutputs {
    pub dir: PathBuf,
    pub reports: Vec<FoldReport>,
    pub rows: Vec<MetricsRow>,
    pub summary: MetricsSummary,
    pub manifest: Manifest,
}

/// Load the signalset (segmented if configured) and build the experiment.
pub fn prepare(cfg: &RunConfig) -> Result<(SignalSet, Experiment), RunError> {
    let mut set = io::load_signalset(&cfg.signalset)?;
    if let Some(w) = cfg.window_ms {
        set = segment(&set, w)?;
    }
    let structure = io::load_structure(&cfg.structure)?;
    let exp = Experiment::from_signalset(&set, structure, cfg.experiment())?;
    Ok((set, exp))
}

fn trace_name(classifier: &str, fold: usize) -> String {
    format!("{TRACE_DIR}/trace_{classifier}_fold{fold}.csv")
}

/// Run the configured experiment and write metrics, summary, per-fold
/// details, optimizer traces and the manifest under `cfg.output`.
pub fn execute(cfg: &RunConfig, workers: Option<usize>) -> Result<RunOutputs, RunError> {
    if cfg.classifiers.is_empty() {
        return Err(RunError::NoClassifiers);
    }
    let (set, exp) = prepare(cfg)?;
    let reports = run_folds(&exp, &cfg.classifiers, workers)?;
    let rows: Vec<MetricsRow> = reports.iter().flat_map(|r| r.rows.iter().cloned()).collect();
    let summary = summarize(&rows, cfg.alpha)?;

    let dir = cfg.output.clone();
    fs::create_dir_all(&dir).map_err(|source| IoError::Io {
        path: dir.clone(),
        source,
    })?;
    let mut outputs = vec![
        METRICS_FILE.to_string(),
        SUMMARY_FILE.to_string(),
        FOLDS_FILE.to_string(),
    ];
    io::write_metrics_csv(&dir.join(METRICS_FILE), &rows)?;
    io::write_json(&dir.join(SUMMARY_FILE), &summary)?;
    io::write_json(&dir.join(FOLDS_FILE), &reports)?;
    let evolutionary: Vec<(&FoldReport, &SearchResult)> = reports
        .iter()
        .filter_map(|r| r.octx.as_ref().map(|o| (r, o)))
        .filter(|(_, o)| o.method == SearchMethod::Evolutionary)
        .collect();
    if !evolutionary.is_empty() {
        let traces = dir.join(TRACE_DIR);
        fs::create_dir_all(&traces).map_err(|source| IoError::Io { path: traces, source })?;
    }
    for (r, o) in evolutionary {
        let name = trace_name(&r.classifier, r.fold);
        io::write_trace_csv(&dir.join(&name), &o.trace)?;
        outputs.push(name);
    }
    let search = if exp.feasible().len() > cfg.exhaustive_limit {
        SearchMethod::Evolutionary
    } else {
        SearchMethod::Exhaustive
    };
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: config_hash(cfg),
        seed: cfg.seed,
        config: cfg.clone(),
        records: set.len(),
        feasible_size: exp.feasible().len(),
        search,
        outputs,
    };
    io::write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(RunOutputs {
        dir,
        reports,
        rows,
        summary,
        manifest,
    })
}

pub struct Optimized {
    pub classifier: String,
    pub search: SearchResult,
    pub ensemble: ContextEnsemble<TrainedModel>,
}

/// Search the binding on the whole signalset for one classifier and train
/// the ensemble it selects.
pub fn optimize(exp: &Experiment, spec: &ClassifierSpec) -> Result<Optimized, RunError> {
    let learner = classifier_for_fold(spec, exp.config().seed, exp.config().folds);
    let search = exp.optimize_binding(&learner)?;
    let ensemble = train_ensemble(
        exp.structure(),
        &search.best,
        exp.rows(),
        exp.labels(),
        &learner,
        exp.config().feature_fraction,
    )
    .map_err(EvaluationError::from)?;
    Ok(Optimized {
        classifier: spec.algorithm.tag().to_string(),
        search,
        ensemble,
    })
}

/// Write the binding, the evaluation table or trace, and the ensemble file.
pub fn write_optimized(dir: &Path, o: &Optimized) -> Result<Vec<String>, RunError> {
    fs::create_dir_all(dir).map_err(|source| IoError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    let binding = format!("binding_{}.json", o.classifier);
    io::write_json(&dir.join(&binding), &BindingFile::from(&o.search))?;
    written.push(binding);
    if o.search.method == SearchMethod::Evolutionary {
        let trace = format!("trace_{}.csv", o.classifier);
        io::write_trace_csv(&dir.join(&trace), &o.search.trace)?;
        written.push(trace);
    }
    let ens = format!("ensemble_{}.json", o.classifier);
    io::save_ensemble(&dir.join(&ens), &o.ensemble)?;
    written.push(ens);
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BindingFile {
    pub binding: Binding,
    pub fitness: f64,
    pub method: SearchMethod,
    pub evaluations: usize,
}

impl From<&SearchResult> for BindingFile {
    fn from(r: &SearchResult) -> Self {
        Self {
            binding: r.best.clone(),
            fitness: r.fitness,
            method: r.method,
            evaluations: r.evaluations,
        }
    }
}
