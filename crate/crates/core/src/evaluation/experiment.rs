use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{evaluate_sequence, sqcov_metric, SequenceClassifier, SequenceOutcome};
use super::sequences::{class_pools, generate_movement_sequences, sample_object_sequences, sequence_to_classes};
use super::stats::{holm, mean_std, rank_descending, wilcoxon_signed_rank, WilcoxonResult};
use super::{EvaluationError, MovementSequence};
use crate::classify::{ClassifierSpec, Learner};
use crate::context::{derive_constraints, enumerate_feasible_bounded, Binding, ContextStructure, FeasibleSet};
use crate::features::extract_features;
use crate::optimizer::{search, FitnessCache, OptimizerError, SearchPolicy, SearchResult, FEASIBLE_SIZE_LIMIT};
use crate::rng::{derive_seed, rng_from_seed, stream};
use crate::runtime::{train_ensemble_cached, ModelCache, SELECTION_FRACTION};
use crate::signal::{fold_members, stratified_assignment, SignalSet};
use crate::ClassLabel;

pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_INNER_FOLDS: usize = 3;
pub const DEFAULT_REPETITIONS: usize = 20;
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Plain,
    Octx,
    Rctx,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Plain, Method::Octx, Method::Rctx];

    /// Number used in significance marks.
    pub fn index(self) -> u8 {
        match self {
            Method::Plain => 1,
            Method::Octx => 2,
            Method::Rctx => 3,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Method::Plain => "plain",
            Method::Octx => "octx",
            Method::Rctx => "rctx",
        }
    }

    pub fn is_contextual(self) -> bool {
        self != Method::Plain
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl core::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag().eq_ignore_ascii_case(s))
            .ok_or_else(|| alloc::format!("unknown method '{s}' (plain, octx, rctx)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub folds: usize,
    pub inner_folds: usize,
    /// Object sequences drawn per movement sequence.
    pub repetitions: usize,
    pub feature_fraction: f64,
    pub methods: Vec<Method>,
    pub search: SearchPolicy,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            folds: DEFAULT_FOLDS,
            inner_folds: DEFAULT_INNER_FOLDS,
            repetitions: DEFAULT_REPETITIONS,
            feature_fraction: SELECTION_FRACTION,
            methods: Method::ALL.to_vec(),
            search: SearchPolicy::default(),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), EvaluationError> {
        if self.folds < 2 {
            return Err(EvaluationError::InvalidConfig("folds must be at least 2"));
        }
        if self.methods.contains(&Method::Octx) && self.inner_folds < 2 {
            return Err(EvaluationError::InvalidConfig("inner_folds must be at least 2"));
        }
        if self.repetitions == 0 {
            return Err(EvaluationError::InvalidConfig("repetitions must be positive"));
        }
        if !(self.feature_fraction > 0.0 && self.feature_fraction <= 1.0) {
            return Err(EvaluationError::InvalidConfig("feature_fraction must lie in (0, 1]"));
        }
        if self.methods.is_empty() {
            return Err(EvaluationError::InvalidConfig("no methods selected"));
        }
        self.search.ea.validate()?;
        Ok(())
    }
}

/// Metrics of one method and classifier on one outer test fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub method: Method,
    pub classifier: String,
    pub fold: usize,
    /// Evaluated object sequences, `K = G * R`.
    pub sequences: usize,
    /// Movement intentions the system can express.
    pub movements: usize,
    pub zo: f64,
    pub zo_std: f64,
    pub sqcov: f64,
    pub sqcov_std: f64,
}

impl MetricsRow {
    fn from_outcomes(
        method: Method,
        classifier: String,
        fold: usize,
        movements: usize,
        outcomes: &[SequenceOutcome],
    ) -> Result<Self, EvaluationError> {
        if outcomes.is_empty() {
            return Err(EvaluationError::NoOutcomes);
        }
        let zo: Vec<f64> = outcomes.iter().map(SequenceOutcome::zero_one).collect();
        let sq: Vec<f64> = outcomes.iter().map(SequenceOutcome::coverage).collect();
        let (zo, zo_std) = mean_std(&zo);
        let (sqcov, sqcov_std) = mean_std(&sq);
        Ok(Self {
            method,
            classifier,
            fold,
            sequences: outcomes.len(),
            movements,
            zo,
            zo_std,
            sqcov,
            sqcov_std,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub classifier: String,
    pub rctx_binding: Binding,
    pub octx: Option<SearchResult>,
    pub rows: Vec<MetricsRow>,
    /// Distinct models fitted for the outer evaluation.
    pub models_trained: usize,
}

/// A labelled feature matrix, a box structure and the fixed fold plan shared
/// by every method and classifier.
#[derive(Debug, Clone)]
pub struct Experiment {
    rows: Vec<Vec<f64>>,
    labels: Vec<ClassLabel>,
    structure: ContextStructure,
    config: ExperimentConfig,
    feasible: FeasibleSet,
    sequences: Vec<MovementSequence>,
    fold_of: Vec<usize>,
}

struct InnerSplit<M> {
    rows: Vec<Vec<f64>>,
    labels: Vec<ClassLabel>,
    pools: Vec<Vec<usize>>,
    cache: ModelCache<M>,
}

impl Experiment {
    pub fn new(
        rows: Vec<Vec<f64>>,
        labels: Vec<ClassLabel>,
        structure: ContextStructure,
        config: ExperimentConfig,
    ) -> Result<Self, EvaluationError> {
        config.validate()?;
        if rows.len() != labels.len() {
            return Err(EvaluationError::RowCount {
                rows: rows.len(),
                labels: labels.len(),
            });
        }
        let c = structure.num_classes();
        if let Some(&label) = labels.iter().find(|&&l| l == 0 || l > c) {
            return Err(EvaluationError::LabelOutOfRange { label, num_classes: c });
        }
        let feasible = enumerate_feasible_bounded(&derive_constraints(&structure)?, FEASIBLE_SIZE_LIMIT)?;
        if feasible.is_empty() {
            return Err(OptimizerError::EmptyFeasibleSet.into());
        }
        let fold_of = stratified_assignment(&labels, c, config.folds, derive_seed(config.seed, stream::FOLDS))?;
        let sequences = generate_movement_sequences(&structure);
        Ok(Self {
            rows,
            labels,
            structure,
            config,
            feasible,
            sequences,
            fold_of,
        })
    }

    /// Extract one feature vector per record and build the experiment.
    pub fn from_signalset(
        set: &SignalSet,
        structure: ContextStructure,
        config: ExperimentConfig,
    ) -> Result<Self, EvaluationError> {
        let rows = set
            .records()
            .iter()
            .map(|r| extract_features(r).map(|f| f.values))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(rows, set.labels(), structure, config)
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn structure(&self) -> &ContextStructure {
        &self.structure
    }

    pub fn feasible(&self) -> &FeasibleSet {
        &self.feasible
    }

    pub fn sequences(&self) -> &[MovementSequence] {
        &self.sequences
    }

    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[ClassLabel] {
        &self.labels
    }

    fn fold_seed(&self, tag: u64, fold: usize) -> u64 {
        derive_seed(derive_seed(self.config.seed, tag), fold as u64)
    }

    /// Feasible binding drawn uniformly for the randomly bound ensemble.
    pub fn random_binding(&self, fold: usize) -> Binding {
        let mut rng = rng_from_seed(self.fold_seed(stream::RCTX_BINDING, fold));
        self.feasible.bindings()[rng.gen_range(0..self.feasible.len())].clone()
    }

    /// Run every configured method for a classifier spec, reseeded per fold.
    pub fn run_spec_fold(&self, spec: &ClassifierSpec, fold: usize) -> Result<FoldReport, EvaluationError> {
        self.run_fold(&classifier_for_fold(spec, self.config.seed, fold), fold)
    }

    pub fn run_spec(&self, spec: &ClassifierSpec) -> Result<Vec<FoldReport>, EvaluationError> {
        (0..self.config.folds).map(|f| self.run_spec_fold(spec, f)).collect()
    }

    pub fn run<L: Learner>(&self, learner: &L) -> Result<Vec<FoldReport>, EvaluationError> {
        (0..self.config.folds).map(|f| self.run_fold(learner, f)).collect()
    }

    pub fn run_fold<L: Learner>(&self, learner: &L, fold: usize) -> Result<FoldReport, EvaluationError> {
        if fold >= self.config.folds {
            return Err(EvaluationError::NoSuchFold {
                fold,
                k: self.config.folds,
            });
        }
        let c = self.structure.num_classes();
        let train = fold_members(&self.fold_of, fold, false);
        let test = fold_members(&self.fold_of, fold, true);
        let tr_rows: Vec<Vec<f64>> = train.iter().map(|&i| self.rows[i].clone()).collect();
        let tr_labels: Vec<ClassLabel> = train.iter().map(|&i| self.labels[i]).collect();
        let pools = class_pools(&self.labels, &test, c);

        let rctx = self.random_binding(fold);
        let octx = if self.config.methods.contains(&Method::Octx) {
            Some(self.optimise(learner, fold, &tr_rows, &tr_labels)?)
        } else {
            None
        };

        let fraction = self.config.feature_fraction;
        let sampling = self.fold_seed(stream::SAMPLING, fold);
        let all: Vec<ClassLabel> = (1..=c).collect();
        let mut cache = ModelCache::new();
        let mut rows = Vec::with_capacity(self.config.methods.len());
        for &method in &self.config.methods {
            let (outcomes, movements) = match method {
                Method::Plain => {
                    let model = cache.get_or_fit(&all, &tr_rows, &tr_labels, learner, fraction)?;
                    (self.score(&*model, &rctx, &pools, &self.rows, sampling)?, c as usize)
                }
                Method::Rctx | Method::Octx => {
                    let binding = match (method, &octx) {
                        (Method::Octx, Some(r)) => &r.best,
                        _ => &rctx,
                    };
                    let ens = train_ensemble_cached(
                        &self.structure,
                        binding,
                        &tr_rows,
                        &tr_labels,
                        learner,
                        fraction,
                        &mut cache,
                    )?;
                    (
                        self.score(&ens, binding, &pools, &self.rows, sampling)?,
                        self.structure.num_movements() as usize,
                    )
                }
            };
            rows.push(MetricsRow::from_outcomes(
                method,
                learner.name(),
                fold,
                movements,
                &outcomes,
            )?);
        }
        Ok(FoldReport {
            fold,
            classifier: learner.name(),
            rctx_binding: rctx,
            octx,
            rows,
            models_trained: cache.trained(),
        })
    }

    /// Binding search on the full data set, with its own seed slot.
    pub fn optimize_binding<L: Learner>(&self, learner: &L) -> Result<SearchResult, EvaluationError> {
        self.optimise(learner, self.config.folds, &self.rows, &self.labels)
    }

    /// Classify `R` object sequences per movement sequence. The draws depend
    /// only on `seed` and the sequence index, so systems compared under the
    /// same seed see matching objects wherever their class sequences agree.
    fn score<S: SequenceClassifier + ?Sized>(
        &self,
        system: &S,
        binding: &Binding,
        pools: &[Vec<usize>],
        rows: &[Vec<f64>],
        seed: u64,
    ) -> Result<Vec<SequenceOutcome>, EvaluationError> {
        let mut out = Vec::with_capacity(self.sequences.len() * self.config.repetitions);
        for (g, seq) in self.sequences.iter().enumerate() {
            let classes = sequence_to_classes(seq, &self.structure, binding)?;
            let mut rng = rng_from_seed(derive_seed(seed, g as u64));
            for objects in sample_object_sequences(&classes, pools, self.config.repetitions, &mut rng)? {
                let xs: Vec<&[f64]> = objects.iter().map(|&i| rows[i].as_slice()).collect();
                out.push(evaluate_sequence(system, &xs, &classes)?);
            }
        }
        Ok(out)
    }

    /// Best binding by mean SqCov over an inner cross-validation of the
    /// training fold.
    fn optimise<L: Learner>(
        &self,
        learner: &L,
        fold: usize,
        tr_rows: &[Vec<f64>],
        tr_labels: &[ClassLabel],
    ) -> Result<SearchResult, EvaluationError> {
        let c = self.structure.num_classes();
        let k = self.config.inner_folds;
        let inner_of = stratified_assignment(tr_labels, c, k, self.fold_seed(stream::INNER_FOLDS, fold))?;
        let mut splits: Vec<InnerSplit<L::Model>> = (0..k)
            .map(|j| {
                let tr = fold_members(&inner_of, j, false);
                let te = fold_members(&inner_of, j, true);
                InnerSplit {
                    rows: tr.iter().map(|&i| tr_rows[i].clone()).collect(),
                    labels: tr.iter().map(|&i| tr_labels[i]).collect(),
                    pools: class_pools(tr_labels, &te, c),
                    cache: ModelCache::new(),
                }
            })
            .collect();
        let sampling = self.fold_seed(stream::INNER_SAMPLING, fold);
        let fraction = self.config.feature_fraction;
        let mut failure: Option<EvaluationError> = None;
        let fitness = |b: &Binding| -> f64 {
            if failure.is_some() {
                return f64::NEG_INFINITY;
            }
            let mut total = 0.0;
            for (j, split) in splits.iter_mut().enumerate() {
                let value = train_ensemble_cached(
                    &self.structure,
                    b,
                    &split.rows,
                    &split.labels,
                    learner,
                    fraction,
                    &mut split.cache,
                )
                .map_err(EvaluationError::from)
                .and_then(|ens| self.score(&ens, b, &split.pools, tr_rows, derive_seed(sampling, j as u64)))
                .and_then(|o| sqcov_metric(&o));
                match value {
                    Ok(v) => total += v,
                    Err(e) => {
                        failure = Some(e);
                        return f64::NEG_INFINITY;
                    }
                }
            }
            total / k as f64
        };
        let mut policy = self.config.search.clone();
        policy.ea.seed = derive_seed(self.fold_seed(stream::EA, fold), policy.ea.seed);
        let mut cache = FitnessCache::new(fitness);
        let result = search(&self.feasible, &mut cache, &policy);
        drop(cache);
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(result?)
    }
}

/// `spec` reseeded from the master seed and the fold index.
pub fn classifier_for_fold(spec: &ClassifierSpec, master: u64, fold: usize) -> ClassifierSpec {
    let fold_seed = derive_seed(derive_seed(master, stream::CLASSIFIER), fold as u64);
    spec.with_seed(derive_seed(fold_seed, spec.seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Zo,
    Sqcov,
}

/// Paired Wilcoxon test of two methods over folds, with its Holm decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    pub classifier: String,
    pub criterion: Criterion,
    pub a: Method,
    pub b: Method,
    pub wilcoxon: WilcoxonResult,
    pub reject: bool,
}

impl PairTest {
    /// The significantly better method, if any.
    pub fn winner(&self) -> Option<Method> {
        if !self.reject {
            None
        } else if self.wilcoxon.r_plus > self.wilcoxon.r_minus {
            Some(self.a)
        } else if self.wilcoxon.r_minus > self.wilcoxon.r_plus {
            Some(self.b)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub method: Method,
    pub classifier: String,
    pub folds: usize,
    pub movements: usize,
    pub zo_mean: f64,
    pub zo_std: f64,
    pub sqcov_mean: f64,
    pub sqcov_std: f64,
    pub zo_rank: f64,
    pub sqcov_rank: f64,
    /// Indices of the methods this one beats significantly.
    pub zo_beats: Vec<u8>,
    pub sqcov_beats: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub alpha: f64,
    pub entries: Vec<SummaryEntry>,
    pub tests: Vec<PairTest>,
}

impl MetricsSummary {
    pub fn entry(&self, method: Method, classifier: &str) -> Option<&SummaryEntry> {
        self.entries
            .iter()
            .find(|e| e.method == method && e.classifier == classifier)
    }
}

/// Per classifier: fold means and population stds, ranks of the methods by
/// mean (best = number of methods), and Holm-corrected pairwise Wilcoxon
/// tests over the per-fold values.
pub fn summarize(rows: &[MetricsRow], alpha: f64) -> Result<MetricsSummary, EvaluationError> {
    let mut groups: BTreeMap<&str, BTreeMap<Method, Vec<&MetricsRow>>> = BTreeMap::new();
    for r in rows {
        groups
            .entry(r.classifier.as_str())
            .or_default()
            .entry(r.method)
            .or_default()
            .push(r);
    }
    let mut entries = Vec::new();
    let mut tests = Vec::new();
    for (classifier, by_method) in groups {
        let methods: Vec<Method> = by_method.keys().copied().collect();
        let mut series: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
        for list in by_method.values() {
            let mut list = list.clone();
            list.sort_by_key(|r| r.fold);
            series.push((
                list.iter().map(|r| r.zo).collect(),
                list.iter().map(|r| r.sqcov).collect(),
            ));
        }
        let zo_means: Vec<f64> = series.iter().map(|s| mean_std(&s.0).0).collect();
        let sq_means: Vec<f64> = series.iter().map(|s| mean_std(&s.1).0).collect();
        let zo_ranks = rank_descending(&zo_means);
        let sq_ranks = rank_descending(&sq_means);

        let mut local: Vec<PairTest> = Vec::new();
        for criterion in [Criterion::Zo, Criterion::Sqcov] {
            let mut pairs = Vec::new();
            for i in 0..methods.len() {
                for j in i + 1..methods.len() {
                    let pick = |k: usize| match criterion {
                        Criterion::Zo => &series[k].0,
                        Criterion::Sqcov => &series[k].1,
                    };
                    pairs.push((i, j, wilcoxon_signed_rank(pick(i), pick(j))?));
                }
            }
            let p: Vec<f64> = pairs.iter().map(|x| x.2.p_value).collect();
            for ((i, j, w), reject) in pairs.into_iter().zip(holm(&p, alpha)) {
                local.push(PairTest {
                    classifier: String::from(classifier),
                    criterion,
                    a: methods[i],
                    b: methods[j],
                    wilcoxon: w,
                    reject,
                });
            }
        }

        for (k, (&method, list)) in by_method.iter().enumerate() {
            let beats = |criterion: Criterion| -> Vec<u8> {
                let mut v: Vec<u8> = local
                    .iter()
                    .filter(|t| t.criterion == criterion && t.winner() == Some(method))
                    .map(|t| if t.a == method { t.b.index() } else { t.a.index() })
                    .collect();
                v.sort_unstable();
                v
            };
            let (zo_mean, zo_std) = mean_std(&series[k].0);
            let (sqcov_mean, sqcov_std) = mean_std(&series[k].1);
            entries.push(SummaryEntry {
                method,
                classifier: String::from(classifier),
                folds: list.len(),
                movements: list[0].movements,
                zo_mean,
                zo_std,
                sqcov_mean,
                sqcov_std,
                zo_rank: zo_ranks[k],
                sqcov_rank: sq_ranks[k],
                zo_beats: beats(Criterion::Zo),
                sqcov_beats: beats(Criterion::Sqcov),
            });
        }
        tests.extend(local);
    }
    Ok(MetricsSummary { alpha, entries, tests })
}
