use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_dim, Classifier, ClassifierError, TrainingData};
use crate::ClassLabel;

/// Euclidean 1-nearest-neighbour over the stored training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearestNeighbor {
    classes: Vec<ClassLabel>,
    dim: usize,
    rows: Vec<Vec<f64>>,
    labels: Vec<ClassLabel>,
}

impl NearestNeighbor {
    pub(crate) fn fit(data: &TrainingData<'_>) -> Self {
        Self {
            classes: data.classes.clone(),
            dim: data.dim,
            rows: data.rows.to_vec(),
            labels: data.labels.to_vec(),
        }
    }
}

impl Classifier for NearestNeighbor {
    fn classes(&self) -> &[ClassLabel] {
        &self.classes
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn predict(&self, x: &[f64]) -> Result<ClassLabel, ClassifierError> {
        check_dim(self.dim, x)?;
        let mut best = (f64::INFINITY, ClassLabel::MAX);
        for (row, &label) in self.rows.iter().zip(&self.labels) {
            let d: f64 = row.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            // equidistant neighbours resolve to the smallest label
            if d < best.0 || (d == best.0 && label < best.1) {
                best = (d, label);
            }
        }
        Ok(best.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn exact_match_and_resubstitution() {
        let rows = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![5.0, 5.0]];
        let labels = [3, 1, 2, 3];
        let data = TrainingData::check(&rows, &labels).unwrap();
        let m = NearestNeighbor::fit(&data);
        for (r, y) in rows.iter().zip(labels) {
            assert_eq!(m.predict(r).unwrap(), y);
        }
        // (0.5, 0.5) is equidistant from three points labelled 3, 1 and 2
        assert_eq!(m.predict(&[0.5, 0.5]).unwrap(), 1);
    }
}
