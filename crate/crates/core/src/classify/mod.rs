//! Supervised classifiers used as initial and box classifiers.

mod forest;
mod knn;
mod naive_bayes;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ClassLabel;

pub use forest::{majority_vote, DecisionTree, RandomForest};
pub use knn::NearestNeighbor;
pub use naive_bayes::GaussianNb;

pub const DEFAULT_TREES: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifierError {
    #[error("training data holds a single class")]
    DegenerateTraining,
    #[error("no training rows")]
    EmptyTraining,
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("expected {expected} features, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite value in training row {0}")]
    NonFinite(usize),
    #[error("random forest needs at least one tree")]
    NoTrees,
}

/// A trained model mapping a feature vector to one of its classes.
pub trait Classifier {
    /// Sorted list of labels the model can emit.
    fn classes(&self) -> &[ClassLabel];
    fn dim(&self) -> usize;
    fn predict(&self, x: &[f64]) -> Result<ClassLabel, ClassifierError>;
}

/// Something that trains a [`Classifier`] from labelled rows.
pub trait Learner {
    type Model: Classifier;
    fn fit(&self, rows: &[Vec<f64>], labels: &[ClassLabel]) -> Result<Self::Model, ClassifierError>;
    /// Short tag used in result tables.
    fn name(&self) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[serde(alias = "nn")]
    NearestNeighbor,
    #[serde(alias = "nb")]
    GaussianNb,
    #[serde(alias = "rf")]
    RandomForest,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [
        Algorithm::NearestNeighbor,
        Algorithm::GaussianNb,
        Algorithm::RandomForest,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::NearestNeighbor => "NN",
            Algorithm::GaussianNb => "NB",
            Algorithm::RandomForest => "RF",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl core::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nn" | "nearest_neighbor" => Ok(Algorithm::NearestNeighbor),
            "nb" | "gaussian_nb" => Ok(Algorithm::GaussianNb),
            "rf" | "random_forest" => Ok(Algorithm::RandomForest),
            other => Err(alloc::format!("unknown classifier {other:?}")),
        }
    }
}

fn default_trees() -> usize {
    DEFAULT_TREES
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub algorithm: Algorithm,
    #[serde(default = "default_trees")]
    pub trees: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            trees: DEFAULT_TREES,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum TrainedModel {
    NearestNeighbor(NearestNeighbor),
    GaussianNb(GaussianNb),
    RandomForest(RandomForest),
}

impl TrainedModel {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            TrainedModel::NearestNeighbor(_) => Algorithm::NearestNeighbor,
            TrainedModel::GaussianNb(_) => Algorithm::GaussianNb,
            TrainedModel::RandomForest(_) => Algorithm::RandomForest,
        }
    }

    fn inner(&self) -> &dyn Classifier {
        match self {
            TrainedModel::NearestNeighbor(m) => m,
            TrainedModel::GaussianNb(m) => m,
            TrainedModel::RandomForest(m) => m,
        }
    }
}

impl Classifier for TrainedModel {
    fn classes(&self) -> &[ClassLabel] {
        self.inner().classes()
    }

    fn dim(&self) -> usize {
        self.inner().dim()
    }

    fn predict(&self, x: &[f64]) -> Result<ClassLabel, ClassifierError> {
        self.inner().predict(x)
    }
}

impl Learner for ClassifierSpec {
    type Model = TrainedModel;

    fn fit(&self, rows: &[Vec<f64>], labels: &[ClassLabel]) -> Result<TrainedModel, ClassifierError> {
        train(self, rows, labels)
    }

    fn name(&self) -> String {
        String::from(self.algorithm.tag())
    }
}

pub fn train(spec: &ClassifierSpec, rows: &[Vec<f64>], labels: &[ClassLabel]) -> Result<TrainedModel, ClassifierError> {
    let data = TrainingData::check(rows, labels)?;
    Ok(match spec.algorithm {
        Algorithm::NearestNeighbor => TrainedModel::NearestNeighbor(NearestNeighbor::fit(&data)),
        Algorithm::GaussianNb => TrainedModel::GaussianNb(GaussianNb::fit(&data)),
        Algorithm::RandomForest => {
            if spec.trees == 0 {
                return Err(ClassifierError::NoTrees);
            }
            TrainedModel::RandomForest(RandomForest::fit(&data, spec.trees, spec.seed))
        }
    })
}

pub fn predict<M: Classifier + ?Sized>(model: &M, x: &[f64]) -> Result<ClassLabel, ClassifierError> {
    model.predict(x)
}

/// Validated training input shared by the algorithms.
pub(crate) struct TrainingData<'a> {
    pub rows: &'a [Vec<f64>],
    pub labels: &'a [ClassLabel],
    pub classes: Vec<ClassLabel>,
    /// Index into `classes` per row.
    pub class_idx: Vec<usize>,
    pub dim: usize,
}

impl<'a> TrainingData<'a> {
    pub fn check(rows: &'a [Vec<f64>], labels: &'a [ClassLabel]) -> Result<Self, ClassifierError> {
        if rows.len() != labels.len() {
            return Err(ClassifierError::LengthMismatch {
                rows: rows.len(),
                labels: labels.len(),
            });
        }
        let dim = rows.first().ok_or(ClassifierError::EmptyTraining)?.len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(ClassifierError::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(ClassifierError::NonFinite(i));
            }
        }
        let mut classes = labels.to_vec();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() < 2 {
            return Err(ClassifierError::DegenerateTraining);
        }
        let class_idx = labels
            .iter()
            .map(|y| classes.binary_search(y).expect("label present"))
            .collect();
        Ok(Self {
            rows,
            labels,
            classes,
            class_idx,
            dim,
        })
    }
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<(), ClassifierError> {
    if x.len() != expected {
        Err(ClassifierError::DimensionMismatch {
            expected,
            found: x.len(),
        })
    } else {
        Ok(())
    }
}

/// Index of the largest score; ties resolve to the lowest index.
pub(crate) fn argmax_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}
