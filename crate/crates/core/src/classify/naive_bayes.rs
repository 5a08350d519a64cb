use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{argmax_first, check_dim, Classifier, ClassifierError, TrainingData};
use crate::ClassLabel;

pub const VARIANCE_FLOOR: f64 = 1e-9;

/// Gaussian naive Bayes with per-class, per-feature mean and variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    classes: Vec<ClassLabel>,
    dim: usize,
    log_priors: Vec<f64>,
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
}

impl GaussianNb {
    pub(crate) fn fit(data: &TrainingData<'_>) -> Self {
        let k = data.classes.len();
        let d = data.dim;
        let mut counts = vec![0usize; k];
        let mut means = vec![vec![0.0; d]; k];
        for (row, &c) in data.rows.iter().zip(&data.class_idx) {
            counts[c] += 1;
            for (m, v) in means[c].iter_mut().zip(row) {
                *m += v;
            }
        }
        for (m, &n) in means.iter_mut().zip(&counts) {
            m.iter_mut().for_each(|v| *v /= n as f64);
        }
        let mut variances = vec![vec![0.0; d]; k];
        for (row, &c) in data.rows.iter().zip(&data.class_idx) {
            for ((s, v), m) in variances[c].iter_mut().zip(row).zip(&means[c]) {
                *s += (v - m) * (v - m);
            }
        }
        for (var, &n) in variances.iter_mut().zip(&counts) {
            var.iter_mut().for_each(|v| *v = (*v / n as f64).max(VARIANCE_FLOOR));
        }
        let total = data.rows.len() as f64;
        Self {
            classes: data.classes.clone(),
            dim: d,
            log_priors: counts.iter().map(|&n| libm::log(n as f64 / total)).collect(),
            means,
            variances,
        }
    }

    /// Unnormalised log posterior per class.
    pub fn log_scores(&self, x: &[f64]) -> Vec<f64> {
        self.log_priors
            .iter()
            .zip(self.means.iter().zip(&self.variances))
            .map(|(prior, (mu, var))| {
                prior
                    + x.iter()
                        .zip(mu.iter().zip(var))
                        .map(|(v, (m, s))| {
                            -0.5 * libm::log(2.0 * core::f64::consts::PI * s) - (v - m) * (v - m) / (2.0 * s)
                        })
                        .sum::<f64>()
            })
            .collect()
    }
}

impl Classifier for GaussianNb {
    fn classes(&self) -> &[ClassLabel] {
        &self.classes
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn predict(&self, x: &[f64]) -> Result<ClassLabel, ClassifierError> {
        check_dim(self.dim, x)?;
        Ok(self.classes[argmax_first(&self.log_scores(x))])
    }
}
