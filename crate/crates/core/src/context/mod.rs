//! Box structures, movement-to-class bindings and the feasible-binding set.
//!
//! Movements `1..=C` carry the fixed primary meaning of classes `1..=C`;
//! movements `C+1..=2C` receive their class from the secondary binding, a
//! permutation of `1..=C`. A box is opened by a movement of its parent box
//! and closed by the same movement, so opener and closer share one class.

mod feasible;
mod structure;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ClassLabel;

pub use feasible::{
    box_class_family, combinations_cardinality, derive_constraints, enumerate_feasible, enumerate_feasible_bounded,
    ConstraintTable, FeasibleSet,
};
pub use structure::{validate_structure, BoxDef, BoxNode, ContextStructure, MovementDef, StructureDef, Violation};

/// Movement number in `1..=M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MovementId(pub u32);

impl fmt::Display for MovementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}", self.0)
    }
}

/// Position of a box inside a [`ContextStructure`]; the root box is `BoxId(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BoxId(pub usize);

impl BoxId {
    pub const ROOT: BoxId = BoxId(0);
}

/// What a movement does inside the box where it is performed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MovementRole {
    OpensNestedBox(BoxId),
    ClosesThisBox,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContextError {
    #[error("invalid structure: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("secondary binding must be a permutation of 1..={num_classes}")]
    NotAPermutation { num_classes: u32 },
    #[error("box {box_label}: class {class} bound to two movements")]
    DuplicateClassInBox { box_label: u32, class: ClassLabel },
    #[error("movement {0} has no permitted class")]
    Infeasible(MovementId),
    #[error("feasible set exceeds {limit} bindings")]
    TooManySolutions { limit: usize },
    #[error("need 1 <= M_l <= C, got C={num_classes}, M_l={box_size}")]
    OutOfRange { num_classes: u32, box_size: u32 },
    #[error("no box {0:?}")]
    UnknownBox(BoxId),
}

fn join(v: &[Violation]) -> String {
    let mut s = String::new();
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            s.push_str("; ");
        }
        s.push_str(&alloc::format!("{x}"));
    }
    s
}

/// The primary map (movement `i` is class `i`) plus the secondary
/// permutation `s(C)`: entry `k` is the class of movement `C+k+1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<ClassLabel>", into = "Vec<ClassLabel>")]
pub struct Binding {
    secondary: Vec<ClassLabel>,
}

impl Binding {
    pub fn new(secondary: Vec<ClassLabel>) -> Result<Self, ContextError> {
        let c = secondary.len() as u32;
        let mut seen = alloc::vec![false; secondary.len()];
        for &v in &secondary {
            if v == 0 || v > c || seen[(v - 1) as usize] {
                return Err(ContextError::NotAPermutation { num_classes: c });
            }
            seen[(v - 1) as usize] = true;
        }
        Ok(Self { secondary })
    }

    /// Secondary map equal to the primary one: movement `C+k` gets class `k`.
    pub fn identity(num_classes: u32) -> Self {
        Self {
            secondary: (1..=num_classes).collect(),
        }
    }

    pub fn num_classes(&self) -> u32 {
        self.secondary.len() as u32
    }

    pub fn secondary(&self) -> &[ClassLabel] {
        &self.secondary
    }

    pub fn class_of(&self, m: MovementId) -> ClassLabel {
        let c = self.num_classes();
        if m.0 <= c {
            m.0
        } else {
            self.secondary[(m.0 - c - 1) as usize]
        }
    }

    /// Secondary movement bound to `class`.
    pub fn secondary_movement(&self, class: ClassLabel) -> Option<MovementId> {
        self.secondary
            .iter()
            .position(|&c| c == class)
            .map(|k| MovementId(self.num_classes() + k as u32 + 1))
    }
}

impl TryFrom<Vec<ClassLabel>> for Binding {
    type Error = ContextError;

    fn try_from(v: Vec<ClassLabel>) -> Result<Self, Self::Error> {
        Binding::new(v)
    }
}

impl From<Binding> for Vec<ClassLabel> {
    fn from(b: Binding) -> Self {
        b.secondary
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.secondary.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

/// One row of a box's local interpretation table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalEntry {
    pub class: ClassLabel,
    pub movement: MovementId,
    pub role: MovementRole,
}

/// Movement-to-class table of one box, sorted by class.
pub fn local_map(structure: &ContextStructure, binding: &Binding, at: BoxId) -> Result<Vec<LocalEntry>, ContextError> {
    let node = structure.node(at).ok_or(ContextError::UnknownBox(at))?;
    let mut entries: Vec<LocalEntry> = structure
        .members(at)
        .map(|(movement, role)| LocalEntry {
            class: binding.class_of(movement),
            movement,
            role,
        })
        .collect();
    entries.sort_by_key(|e| e.class);
    if let Some(w) = entries.windows(2).find(|w| w[0].class == w[1].class) {
        return Err(ContextError::DuplicateClassInBox {
            box_label: node.label,
            class: w[0].class,
        });
    }
    Ok(entries)
}

/// The class set `C_l` recognised in a box, ascending.
pub fn local_classes(
    structure: &ContextStructure,
    binding: &Binding,
    at: BoxId,
) -> Result<Vec<ClassLabel>, ContextError> {
    Ok(local_map(structure, binding, at)?
        .into_iter()
        .map(|e| e.class)
        .collect())
}

/// Whether every box sees distinct classes under `binding`.
pub fn is_feasible(structure: &ContextStructure, binding: &Binding) -> bool {
    binding.num_classes() == structure.num_classes()
        && structure.box_ids().all(|b| local_map(structure, binding, b).is_ok())
}

/// Text rendering of the box tree with each box's Movement/Class table.
pub fn describe(structure: &ContextStructure, binding: &Binding) -> String {
    use core::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "C={} M={} L={} binding s(C)={}",
        structure.num_classes(),
        structure.num_movements(),
        structure.box_count(),
        binding
    );
    let mut stack = alloc::vec![BoxId::ROOT];
    while let Some(b) = stack.pop() {
        let node = structure.node(b).expect("box id from structure");
        let indent = "  ".repeat(structure.depth(b));
        match node.opener {
            None => {
                let _ = writeln!(out, "{indent}box {} (initial, order 0)", node.label);
            }
            Some(m) => {
                let _ = writeln!(
                    out,
                    "{indent}box {} (order {}, opened/closed by {} [{}], class {})",
                    node.label,
                    structure.depth(b),
                    m,
                    structure.movement_name(m),
                    binding.class_of(m)
                );
            }
        }
        let _ = writeln!(out, "{indent}  Movement                     Class");
        match local_map(structure, binding, b) {
            Ok(entries) => {
                for e in entries {
                    let mark = match e.role {
                        MovementRole::OpensNestedBox(_) => "(+)",
                        MovementRole::ClosesThisBox => "(-)",
                        MovementRole::Internal => "",
                    };
                    let name = alloc::format!("{} {} {}", e.movement, structure.movement_name(e.movement), mark);
                    let _ = writeln!(out, "{indent}  {:<28} {}", name, e.class);
                }
            }
            Err(e) => {
                let _ = writeln!(out, "{indent}  infeasible: {e}");
            }
        }
        for &child in node.children.iter().rev() {
            stack.push(child);
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod fixtures;
