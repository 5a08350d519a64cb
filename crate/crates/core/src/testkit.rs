use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::classify::{Classifier, ClassifierError, Learner};
use crate::ClassLabel;

/// Predicts `round(x[0])`, the label planted in every column.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Oracle {
    pub classes: Vec<ClassLabel>,
    pub dim: usize,
}

impl Classifier for Oracle {
    fn classes(&self) -> &[ClassLabel] {
        &self.classes
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn predict(&self, x: &[f64]) -> Result<ClassLabel, ClassifierError> {
        Ok(libm::round(x[0]) as ClassLabel)
    }
}

pub(crate) struct OracleLearner;

impl Learner for OracleLearner {
    type Model = Oracle;
    fn fit(&self, rows: &[Vec<f64>], labels: &[ClassLabel]) -> Result<Oracle, ClassifierError> {
        let mut classes = labels.to_vec();
        classes.sort_unstable();
        classes.dedup();
        Ok(Oracle {
            classes,
            dim: rows[0].len(),
        })
    }
    fn name(&self) -> String {
        String::from("oracle")
    }
}

pub(crate) fn label_rows(c: u32, per_class: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<ClassLabel>) {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for y in 1..=c {
        for _ in 0..per_class {
            rows.push(vec![y as f64; dim]);
            labels.push(y);
        }
    }
    (rows, labels)
}
