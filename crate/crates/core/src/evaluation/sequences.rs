use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EvaluationError;
use crate::context::{local_map, Binding, BoxId, ContextStructure, MovementId, MovementRole};
use crate::ClassLabel;

/// A test movement sequence and the box in which each movement is performed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MovementSequence {
    pub movements: Vec<MovementId>,
    pub performed_in: Vec<BoxId>,
    /// Last box of the path (the initial box for a flat structure).
    pub leaf: BoxId,
}

impl MovementSequence {
    pub fn len(&self) -> usize {
        self.movements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.movements.is_empty()
    }
}

/// One sequence per leaf box. Along the path from the initial box to the
/// leaf, each box contributes its opening movement followed by those of its
/// internal movements that open no box; the closing movements then follow
/// from the leaf back up. A structure without boxes yields the initial box's
/// movements as a single sequence.
pub fn generate_movement_sequences(s: &ContextStructure) -> Vec<MovementSequence> {
    if s.box_count() == 0 {
        let root = s.node(BoxId::ROOT).expect("initial box");
        return vec![MovementSequence {
            movements: root.internal.clone(),
            performed_in: vec![BoxId::ROOT; root.internal.len()],
            leaf: BoxId::ROOT,
        }];
    }
    s.leaves()
        .into_iter()
        .map(|leaf| {
            let path = s.path_to(leaf);
            let mut movements = Vec::new();
            let mut performed_in = Vec::new();
            for w in path.windows(2) {
                let (parent, b) = (w[0], w[1]);
                let node = s.node(b).expect("path box");
                movements.push(node.opener.expect("nested box has opener"));
                performed_in.push(parent);
                for (m, role) in s.members(b) {
                    if role == MovementRole::Internal {
                        movements.push(m);
                        performed_in.push(b);
                    }
                }
            }
            for &b in path[1..].iter().rev() {
                movements.push(s.node(b).and_then(|n| n.opener).expect("nested box has opener"));
                performed_in.push(b);
            }
            MovementSequence {
                movements,
                performed_in,
                leaf,
            }
        })
        .collect()
}

/// Class labels of a movement sequence, each read through the table of the
/// box where the movement is performed.
pub fn sequence_to_classes(
    seq: &MovementSequence,
    s: &ContextStructure,
    binding: &Binding,
) -> Result<Vec<ClassLabel>, EvaluationError> {
    seq.movements
        .iter()
        .zip(&seq.performed_in)
        .map(|(&m, &b)| {
            local_map(s, binding, b)?
                .iter()
                .find(|e| e.movement == m)
                .map(|e| e.class)
                .ok_or(EvaluationError::MovementNotInBox { movement: m, at: b })
        })
        .collect()
}

/// Indices of the objects of every class, `pool[c - 1]` for class `c`.
pub fn class_pools(labels: &[ClassLabel], members: &[usize], num_classes: u32) -> Vec<Vec<usize>> {
    let mut pools = vec![Vec::new(); num_classes as usize];
    for &i in members {
        pools[(labels[i] - 1) as usize].push(i);
    }
    pools
}

/// `r` object sequences for one class sequence, every position drawn
/// uniformly with replacement from that class's pool.
pub fn sample_object_sequences<R: Rng + ?Sized>(
    classes: &[ClassLabel],
    pools: &[Vec<usize>],
    r: usize,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>, EvaluationError> {
    for &c in classes {
        if pools.get((c as usize).wrapping_sub(1)).is_none_or(Vec::is_empty) {
            return Err(EvaluationError::EmptyPool(c));
        }
    }
    Ok((0..r)
        .map(|_| {
            classes
                .iter()
                .map(|&c| {
                    let pool = &pools[(c - 1) as usize];
                    pool[rng.gen_range(0..pool.len())]
                })
                .collect()
        })
        .collect())
}
