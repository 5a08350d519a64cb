//! Choice of the secondary binding: exhaustive search over the feasible set
//! or an evolutionary search over permutations with repair.

mod ea;
mod operators;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::{Binding, FeasibleSet};
use crate::ClassLabel;

pub use ea::ea_search;
pub use operators::{crossover, insert_move, kendall_tau, mutate, ox1_child, ox2_child, repair, Crossover, Mutation};

/// Largest feasible set the optimizer accepts.
pub const FEASIBLE_SIZE_LIMIT: usize = 1_000_000;
pub const DEFAULT_EXHAUSTIVE_LIMIT: usize = 500;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OptimizerError {
    #[error("the feasible set is empty; the box structure admits no binding")]
    EmptyFeasibleSet,
    #[error("empty candidate family")]
    EmptyFamily,
    #[error("input is not a permutation")]
    NotAPermutation,
    #[error("permutations of different length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid parameter: {0}")]
    InvalidParams(&'static str),
    #[error("feasible set of {size} bindings exceeds the limit of {limit}")]
    TooLarge { size: usize, limit: usize },
}

/// Memoised fitness: each distinct binding is evaluated once.
pub struct FitnessCache<F> {
    f: F,
    cache: BTreeMap<Binding, f64>,
    evaluations: usize,
    requests: usize,
}

impl<F: FnMut(&Binding) -> f64> FitnessCache<F> {
    pub fn new(f: F) -> Self {
        Self {
            f,
            cache: BTreeMap::new(),
            evaluations: 0,
            requests: 0,
        }
    }

    pub fn evaluate(&mut self, b: &Binding) -> f64 {
        self.requests += 1;
        if let Some(&v) = self.cache.get(b) {
            return v;
        }
        let v = (self.f)(b);
        self.evaluations += 1;
        self.cache.insert(b.clone(), v);
        v
    }

    /// Store values computed elsewhere (for instance in parallel); they
    /// count as evaluations.
    pub fn prime(&mut self, values: impl IntoIterator<Item = (Binding, f64)>) {
        for (b, v) in values {
            if self.cache.insert(b, v).is_none() {
                self.evaluations += 1;
            }
        }
    }

    /// Distinct bindings evaluated so far.
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn requests(&self) -> usize {
        self.requests
    }

    pub fn cached(&self, b: &Binding) -> Option<f64> {
        self.cache.get(b).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub binding: Binding,
    pub fitness: f64,
}

/// Per-generation summary of an evolutionary run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMethod {
    Exhaustive,
    Evolutionary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: Binding,
    pub fitness: f64,
    pub method: SearchMethod,
    pub evaluations: usize,
    /// Every feasible binding with its fitness (exhaustive search only).
    pub table: Vec<Evaluation>,
    /// One row per generation (evolutionary search only).
    pub trace: Vec<TraceRow>,
}

fn better(f: f64, b: &Binding, best: Option<(f64, &Binding)>) -> bool {
    match best {
        None => true,
        Some((bf, bb)) => f > bf || (f == bf && b < bb),
    }
}

/// Evaluate every feasible binding once and keep the best; ties go to the
/// lexicographically smallest binding.
pub fn exhaustive_search<F: FnMut(&Binding) -> f64>(
    feasible: &FeasibleSet,
    fitness: &mut FitnessCache<F>,
) -> Result<SearchResult, OptimizerError> {
    if feasible.is_empty() {
        return Err(OptimizerError::EmptyFeasibleSet);
    }
    let table: Vec<Evaluation> = feasible
        .iter()
        .map(|b| Evaluation {
            binding: b.clone(),
            fitness: fitness.evaluate(b),
        })
        .collect();
    let mut best: Option<(f64, &Binding)> = None;
    for e in &table {
        if better(e.fitness, &e.binding, best) {
            best = Some((e.fitness, &e.binding));
        }
    }
    let (f, b) = best.expect("nonempty table");
    let best = b.clone();
    Ok(SearchResult {
        best,
        fitness: f,
        method: SearchMethod::Exhaustive,
        evaluations: fitness.evaluations(),
        table,
        trace: Vec::new(),
    })
}

/// Best class set of a single box among `family`; ties go to the
/// lexicographically smallest set. Returns the set, its fitness and the
/// number of evaluations.
pub fn optimize_box_classes(
    family: &[Vec<ClassLabel>],
    mut fitness: impl FnMut(&[ClassLabel]) -> f64,
) -> Result<(Vec<ClassLabel>, f64, usize), OptimizerError> {
    let mut best: Option<(f64, &Vec<ClassLabel>)> = None;
    for set in family {
        let f = fitness(set);
        let take = match best {
            None => true,
            Some((bf, bs)) => f > bf || (f == bf && set < bs),
        };
        if take {
            best = Some((f, set));
        }
    }
    let (f, set) = best.ok_or(OptimizerError::EmptyFamily)?;
    Ok((set.clone(), f, family.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EaParams {
    pub population: usize,
    pub tournament: usize,
    pub crossover: Crossover,
    pub crossover_prob: f64,
    /// Operators drawn uniformly each time a mutation is applied.
    pub mutations: Vec<Mutation>,
    pub mutation_prob: f64,
    /// Generations without improvement before a restart.
    pub stagnation: usize,
    pub generations: usize,
    pub seed: u64,
}

impl Default for EaParams {
    fn default() -> Self {
        Self {
            population: 30,
            tournament: 3,
            crossover: Crossover::Ox1,
            crossover_prob: 0.9,
            mutations: Mutation::ALL.to_vec(),
            mutation_prob: 0.2,
            stagnation: 10,
            generations: 50,
            seed: 0,
        }
    }
}

impl EaParams {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.population < 2 {
            return Err(OptimizerError::InvalidParams("population must be at least 2"));
        }
        if self.tournament < 1 {
            return Err(OptimizerError::InvalidParams("tournament size must be at least 1"));
        }
        if !prob(self.crossover_prob) || !prob(self.mutation_prob) {
            return Err(OptimizerError::InvalidParams("probabilities must lie in [0, 1]"));
        }
        if self.stagnation < 1 {
            return Err(OptimizerError::InvalidParams("stagnation horizon must be at least 1"));
        }
        if self.mutations.is_empty() {
            return Err(OptimizerError::InvalidParams("no mutation operator"));
        }
        Ok(())
    }
}

/// Exhaustive search up to `exhaustive_limit` feasible bindings, evolutionary
/// search above it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchPolicy {
    pub exhaustive_limit: usize,
    pub ea: EaParams,
}

impl Default for SearchPolicy {
    fn default() -> Self {
        Self {
            exhaustive_limit: DEFAULT_EXHAUSTIVE_LIMIT,
            ea: EaParams::default(),
        }
    }
}

pub fn search<F: FnMut(&Binding) -> f64>(
    feasible: &FeasibleSet,
    fitness: &mut FitnessCache<F>,
    policy: &SearchPolicy,
) -> Result<SearchResult, OptimizerError> {
    if feasible.len() > FEASIBLE_SIZE_LIMIT {
        return Err(OptimizerError::TooLarge {
            size: feasible.len(),
            limit: FEASIBLE_SIZE_LIMIT,
        });
    }
    if feasible.len() <= policy.exhaustive_limit {
        exhaustive_search(feasible, fitness)
    } else {
        ea_search(feasible, fitness, &policy.ea)
    }
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}
