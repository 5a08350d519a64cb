use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::EvaluationError;
use crate::classify::Classifier;
use crate::runtime::{ContextEnsemble, MachineState, MaskedModel, RuntimeError};
use crate::ClassLabel;

/// Per-position hits of one classified sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceOutcome {
    hits: Vec<bool>,
}

impl SequenceOutcome {
    pub fn from_hits(hits: Vec<bool>) -> Result<Self, EvaluationError> {
        if hits.is_empty() {
            return Err(EvaluationError::EmptySequence);
        }
        Ok(Self { hits })
    }

    pub fn from_predictions(predicted: &[ClassLabel], truth: &[ClassLabel]) -> Result<Self, EvaluationError> {
        if predicted.len() != truth.len() {
            return Err(EvaluationError::LengthMismatch {
                objects: predicted.len(),
                classes: truth.len(),
            });
        }
        Self::from_hits(predicted.iter().zip(truth).map(|(p, t)| p == t).collect())
    }

    pub fn hits(&self) -> &[bool] {
        &self.hits
    }

    /// `L_k`.
    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }

    /// `l_k`, the 1-based position of the first misclassification.
    pub fn first_error(&self) -> Option<usize> {
        self.hits.iter().position(|h| !h).map(|i| i + 1)
    }

    pub fn error_free(&self) -> bool {
        self.first_error().is_none()
    }

    pub fn zero_one(&self) -> f64 {
        if self.error_free() {
            1.0
        } else {
            0.0
        }
    }

    /// Share of the sequence classified before the first error.
    pub fn coverage(&self) -> f64 {
        match self.first_error() {
            None => 1.0,
            Some(l) => (l - 1) as f64 / self.len() as f64,
        }
    }
}

/// Fraction of sequences classified without any error.
pub fn zo_metric(outcomes: &[SequenceOutcome]) -> Result<f64, EvaluationError> {
    average(outcomes, SequenceOutcome::zero_one)
}

/// Mean share of each sequence recognised before its first error.
pub fn sqcov_metric(outcomes: &[SequenceOutcome]) -> Result<f64, EvaluationError> {
    average(outcomes, SequenceOutcome::coverage)
}

fn average(outcomes: &[SequenceOutcome], f: fn(&SequenceOutcome) -> f64) -> Result<f64, EvaluationError> {
    if outcomes.is_empty() {
        return Err(EvaluationError::NoOutcomes);
    }
    Ok(outcomes.iter().map(f).sum::<f64>() / outcomes.len() as f64)
}

/// A system that labels every object of a sequence.
pub trait SequenceClassifier {
    fn classify_sequence(&self, objects: &[&[f64]]) -> Result<Vec<ClassLabel>, RuntimeError>;
}

impl<M: Classifier> SequenceClassifier for ContextEnsemble<M> {
    /// Runs from the initial state; the state is discarded afterwards.
    fn classify_sequence(&self, objects: &[&[f64]]) -> Result<Vec<ClassLabel>, RuntimeError> {
        let mut state = MachineState::new();
        let out = objects
            .iter()
            .map(|x| self.step(&mut state, x).map(|s| s.class))
            .collect();
        state.reset();
        out
    }
}

impl<M: Classifier> SequenceClassifier for MaskedModel<M> {
    fn classify_sequence(&self, objects: &[&[f64]]) -> Result<Vec<ClassLabel>, RuntimeError> {
        objects.iter().map(|x| self.predict(x)).collect()
    }
}

pub fn evaluate_sequence<S: SequenceClassifier + ?Sized>(
    system: &S,
    objects: &[&[f64]],
    truth: &[ClassLabel],
) -> Result<SequenceOutcome, EvaluationError> {
    if objects.len() != truth.len() {
        return Err(EvaluationError::LengthMismatch {
            objects: objects.len(),
            classes: truth.len(),
        });
    }
    let predicted = system.classify_sequence(objects)?;
    SequenceOutcome::from_predictions(&predicted, truth)
}
