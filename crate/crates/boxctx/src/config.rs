//! Run configuration file.

use std::path::{Path, PathBuf};

use boxctx_core::classify::{Algorithm, ClassifierSpec};
use boxctx_core::evaluation::{ExperimentConfig, Method, DEFAULT_ALPHA};
use boxctx_core::optimizer::{EaParams, SearchPolicy, DEFAULT_EXHAUSTIVE_LIMIT};
use serde::{Deserialize, Serialize};

use crate::io::{read_json, IoError};

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_classifiers() -> Vec<ClassifierSpec> {
    [
        Algorithm::NearestNeighbor,
        Algorithm::GaussianNb,
        Algorithm::RandomForest,
    ]
    .map(ClassifierSpec::new)
    .to_vec()
}

/// Everything needed to replay a run. Relative paths are resolved against
/// the directory of the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub signalset: PathBuf,
    pub structure: PathBuf,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Optional non-overlapping segmentation before feature extraction.
    #[serde(default)]
    pub window_ms: Option<u32>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_classifiers")]
    pub classifiers: Vec<ClassifierSpec>,
    #[serde(default = "defaults::folds")]
    pub folds: usize,
    #[serde(default = "defaults::inner_folds")]
    pub inner_folds: usize,
    #[serde(default = "defaults::repetitions")]
    pub repetitions: usize,
    #[serde(default = "defaults::feature_fraction")]
    pub feature_fraction: f64,
    #[serde(default = "defaults::exhaustive_limit")]
    pub exhaustive_limit: usize,
    #[serde(default)]
    pub ea: EaParams,
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

mod defaults {
    use super::*;

    pub fn folds() -> usize {
        ExperimentConfig::default().folds
    }
    pub fn inner_folds() -> usize {
        ExperimentConfig::default().inner_folds
    }
    pub fn repetitions() -> usize {
        ExperimentConfig::default().repetitions
    }
    pub fn feature_fraction() -> f64 {
        ExperimentConfig::default().feature_fraction
    }
    pub fn exhaustive_limit() -> usize {
        DEFAULT_EXHAUSTIVE_LIMIT
    }
    pub fn alpha() -> f64 {
        DEFAULT_ALPHA
    }
}

impl RunConfig {
    pub fn new(signalset: impl Into<PathBuf>, structure: impl Into<PathBuf>) -> Self {
        Self {
            signalset: signalset.into(),
            structure: structure.into(),
            output: default_output(),
            window_ms: None,
            methods: default_methods(),
            classifiers: default_classifiers(),
            folds: defaults::folds(),
            inner_folds: defaults::inner_folds(),
            repetitions: defaults::repetitions(),
            feature_fraction: defaults::feature_fraction(),
            exhaustive_limit: defaults::exhaustive_limit(),
            ea: EaParams::default(),
            alpha: defaults::alpha(),
            seed: 0,
        }
    }

    /// Parse a configuration file and resolve its relative paths.
    pub fn load(path: &Path) -> Result<Self, IoError> {
        let mut cfg: RunConfig = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.signalset, &mut cfg.structure, &mut cfg.output] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            folds: self.folds,
            inner_folds: self.inner_folds,
            repetitions: self.repetitions,
            feature_fraction: self.feature_fraction,
            methods: self.methods.clone(),
            search: SearchPolicy {
                exhaustive_limit: self.exhaustive_limit,
                ea: self.ea.clone(),
            },
            seed: self.seed,
        }
    }
}
