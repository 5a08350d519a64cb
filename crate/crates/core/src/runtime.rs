//! The context-dependent ensemble and the state machine that runs it.
//!
//! One classifier per box (the initial box included) recognises only the
//! classes bound to that box's movements. Each prediction is read through the
//! current box's movement table: a box-opening movement descends into the
//! nested box, the closing movement returns to the parent, anything else
//! leaves the state unchanged.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{Classifier, ClassifierError, Learner};
use crate::context::{local_map, Binding, BoxId, ContextError, ContextStructure, LocalEntry, MovementId, MovementRole};
use crate::features::{select_features, FeatureError, FeatureMask};
use crate::ClassLabel;

/// Share of features kept by the mutual-information filter.
pub const SELECTION_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuntimeError {
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error("box {box_label}: class {class} has no training objects")]
    UncoveredClass { box_label: u32, class: ClassLabel },
    #[error("expected a feature vector of length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("box {box_label}: predicted class {class} is not bound to any movement there")]
    Uninterpretable { box_label: u32, class: ClassLabel },
}

/// Feature mask plus classifier trained on the rows of a fixed class set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedModel<M> {
    pub classes: Vec<ClassLabel>,
    pub mask: FeatureMask,
    pub model: M,
}

impl<M: Classifier> MaskedModel<M> {
    /// Restrict the training rows to `classes`, select features on them and fit.
    pub fn fit<L: Learner<Model = M>>(
        classes: &[ClassLabel],
        rows: &[Vec<f64>],
        labels: &[ClassLabel],
        learner: &L,
        fraction: f64,
    ) -> Result<Self, RuntimeError> {
        let keep: Vec<usize> = (0..rows.len()).filter(|&i| classes.contains(&labels[i])).collect();
        let sub_rows: Vec<Vec<f64>> = keep.iter().map(|&i| rows[i].clone()).collect();
        let sub_labels: Vec<ClassLabel> = keep.iter().map(|&i| labels[i]).collect();
        let mask = select_features(&sub_rows, &sub_labels, fraction)?;
        let masked: Vec<Vec<f64>> = sub_rows.iter().map(|r| mask.apply(r)).collect();
        let model = learner.fit(&masked, &sub_labels)?;
        Ok(Self {
            classes: classes.to_vec(),
            mask,
            model,
        })
    }

    /// Predict from a full-width feature vector.
    pub fn predict(&self, x: &[f64]) -> Result<ClassLabel, RuntimeError> {
        if x.len() != self.mask.source_dim() {
            return Err(RuntimeError::DimensionMismatch {
                expected: self.mask.source_dim(),
                found: x.len(),
            });
        }
        Ok(self.model.predict(&self.mask.apply(x))?)
    }
}

/// Models already trained on one training set, keyed by class set. Boxes
/// (in any binding) that recognise the same classes share one model.
pub struct ModelCache<M> {
    models: BTreeMap<Vec<ClassLabel>, Arc<MaskedModel<M>>>,
    trained: usize,
}

impl<M> Default for ModelCache<M> {
    fn default() -> Self {
        Self {
            models: BTreeMap::new(),
            trained: 0,
        }
    }
}

impl<M: Classifier> ModelCache<M> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of models fitted so far.
    pub fn trained(&self) -> usize {
        self.trained
    }

    pub fn get_or_fit<L: Learner<Model = M>>(
        &mut self,
        classes: &[ClassLabel],
        rows: &[Vec<f64>],
        labels: &[ClassLabel],
        learner: &L,
        fraction: f64,
    ) -> Result<Arc<MaskedModel<M>>, RuntimeError> {
        if let Some(m) = self.models.get(classes) {
            return Ok(Arc::clone(m));
        }
        let m = Arc::new(MaskedModel::fit(classes, rows, labels, learner, fraction)?);
        self.trained += 1;
        self.models.insert(classes.to_vec(), Arc::clone(&m));
        Ok(m)
    }
}

/// One trained model per box and the movement tables that interpret them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextEnsemble<M> {
    structure: ContextStructure,
    binding: Binding,
    tables: Vec<Vec<LocalEntry>>,
    models: Vec<Arc<MaskedModel<M>>>,
}

impl<M: Classifier> ContextEnsemble<M> {
    pub fn structure(&self) -> &ContextStructure {
        &self.structure
    }

    pub fn binding(&self) -> &Binding {
        &self.binding
    }

    /// Model of box `b`.
    pub fn model(&self, b: BoxId) -> &MaskedModel<M> {
        &self.models[b.0]
    }

    /// Movement table of box `b`, sorted by class.
    pub fn table(&self, b: BoxId) -> &[LocalEntry] {
        &self.tables[b.0]
    }

    pub fn source_dim(&self) -> usize {
        self.models[0].mask.source_dim()
    }

    /// Feed one feature vector: predict in the current box, interpret the
    /// class as a movement there and update `state`.
    pub fn step(&self, state: &mut MachineState, x: &[f64]) -> Result<Step, RuntimeError> {
        let at = state.current();
        let class = self.models[at.0].predict(x)?;
        let table = &self.tables[at.0];
        let entry = table
            .binary_search_by_key(&class, |e| e.class)
            .map(|i| table[i])
            .map_err(|_| RuntimeError::Uninterpretable {
                box_label: self.structure.node(at).map_or(0, |n| n.label),
                class,
            })?;
        match entry.role {
            MovementRole::OpensNestedBox(child) => state.stack.push(child),
            MovementRole::ClosesThisBox => {
                state.stack.pop();
            }
            MovementRole::Internal => {}
        }
        Ok(Step {
            class,
            movement: entry.movement,
            role: entry.role,
            from: at,
            to: state.current(),
        })
    }
}

/// Result of a single [`ContextEnsemble::step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub class: ClassLabel,
    pub movement: MovementId,
    pub role: MovementRole,
    pub from: BoxId,
    pub to: BoxId,
}

/// Stack of open boxes; the initial box is always at the bottom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineState {
    stack: Vec<BoxId>,
}

impl Default for MachineState {
    fn default() -> Self {
        Self::new()
    }
}

impl MachineState {
    pub fn new() -> Self {
        Self {
            stack: vec![BoxId::ROOT],
        }
    }

    pub fn reset(&mut self) {
        self.stack.clear();
        self.stack.push(BoxId::ROOT);
    }

    pub fn current(&self) -> BoxId {
        *self.stack.last().expect("stack holds the initial box")
    }

    pub fn stack(&self) -> &[BoxId] {
        &self.stack
    }

    pub fn is_initial(&self) -> bool {
        self.stack.len() == 1
    }
}

/// Train a model for every box under `binding`.
pub fn train_ensemble<L: Learner>(
    structure: &ContextStructure,
    binding: &Binding,
    rows: &[Vec<f64>],
    labels: &[ClassLabel],
    learner: &L,
    fraction: f64,
) -> Result<ContextEnsemble<L::Model>, RuntimeError> {
    train_ensemble_cached(
        structure,
        binding,
        rows,
        labels,
        learner,
        fraction,
        &mut ModelCache::new(),
    )
}

/// As [`train_ensemble`], reusing models from `cache`, which must hold
/// models trained on the same `rows` and `labels`.
pub fn train_ensemble_cached<L: Learner>(
    structure: &ContextStructure,
    binding: &Binding,
    rows: &[Vec<f64>],
    labels: &[ClassLabel],
    learner: &L,
    fraction: f64,
    cache: &mut ModelCache<L::Model>,
) -> Result<ContextEnsemble<L::Model>, RuntimeError> {
    let mut present: Vec<ClassLabel> = labels.to_vec();
    present.sort_unstable();
    present.dedup();
    let mut tables = Vec::with_capacity(structure.nodes().len());
    let mut models = Vec::with_capacity(structure.nodes().len());
    for b in structure.box_ids() {
        let table = local_map(structure, binding, b)?;
        let classes: Vec<ClassLabel> = table.iter().map(|e| e.class).collect();
        if let Some(&class) = classes.iter().find(|c| present.binary_search(c).is_err()) {
            return Err(RuntimeError::UncoveredClass {
                box_label: structure.node(b).map_or(0, |n| n.label),
                class,
            });
        }
        models.push(cache.get_or_fit(&classes, rows, labels, learner, fraction)?);
        tables.push(table);
    }
    Ok(ContextEnsemble {
        structure: structure.clone(),
        binding: binding.clone(),
        tables,
        models,
    })
}

/// Context-free model over every class in the training data.
pub fn train_plain<L: Learner>(
    rows: &[Vec<f64>],
    labels: &[ClassLabel],
    learner: &L,
    fraction: f64,
) -> Result<MaskedModel<L::Model>, RuntimeError> {
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    MaskedModel::fit(&classes, rows, labels, learner, fraction)
}
