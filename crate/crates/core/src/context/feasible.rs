use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::{Binding, ContextError, ContextStructure, MovementId};
use crate::ClassLabel;

/// Permitted classes for each secondary movement `m_{C+k}`.
///
/// Secondary movements never need a pairwise rule of their own: the
/// secondary binding is a permutation, so any two of them already differ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintTable {
    num_classes: u32,
    permitted: Vec<Vec<ClassLabel>>,
}

impl ConstraintTable {
    /// Table from explicit permitted sets, one per secondary movement.
    pub fn from_permitted(num_classes: u32, permitted: Vec<Vec<ClassLabel>>) -> Result<Self, ContextError> {
        if permitted.len() != num_classes as usize {
            return Err(ContextError::OutOfRange {
                num_classes,
                box_size: permitted.len() as u32,
            });
        }
        let mut permitted = permitted;
        for (k, set) in permitted.iter_mut().enumerate() {
            set.sort_unstable();
            set.dedup();
            if set.iter().any(|&c| c == 0 || c > num_classes) {
                return Err(ContextError::NotAPermutation { num_classes });
            }
            if set.is_empty() {
                return Err(ContextError::Infeasible(MovementId(num_classes + k as u32 + 1)));
            }
        }
        Ok(Self { num_classes, permitted })
    }

    /// Every class permitted for every secondary movement.
    pub fn unconstrained(num_classes: u32) -> Self {
        Self {
            num_classes,
            permitted: vec![(1..=num_classes).collect(); num_classes as usize],
        }
    }

    pub fn num_classes(&self) -> u32 {
        self.num_classes
    }

    /// Permitted classes of secondary movement `m_{C+k+1}`, ascending.
    pub fn permitted(&self, k: usize) -> &[ClassLabel] {
        &self.permitted[k]
    }

    pub fn forbidden(&self, k: usize) -> Vec<ClassLabel> {
        (1..=self.num_classes)
            .filter(|c| self.permitted[k].binary_search(c).is_err())
            .collect()
    }

    pub fn allows(&self, binding: &Binding) -> bool {
        binding.num_classes() == self.num_classes
            && binding
                .secondary()
                .iter()
                .zip(&self.permitted)
                .all(|(c, set)| set.binary_search(c).is_ok())
    }
}

impl fmt::Display for ConstraintTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<8} {:<20} non-permitted", "movement", "permitted")?;
        for k in 0..self.permitted.len() {
            let list = |v: &[ClassLabel]| {
                let parts: Vec<alloc::string::String> = v.iter().map(|c| alloc::format!("{c}")).collect();
                alloc::format!("{{{}}}", parts.join(","))
            };
            writeln!(
                f,
                "{:<8} {:<20} {}",
                alloc::format!("m{}", self.num_classes as usize + k + 1),
                list(&self.permitted[k]),
                list(&self.forbidden(k))
            )?;
        }
        Ok(())
    }
}

/// Permitted classes of each secondary movement: every class except those
/// fixed by primary movements sharing a box with it.
pub fn derive_constraints(s: &ContextStructure) -> Result<ConstraintTable, ContextError> {
    let c = s.num_classes();
    let mut allowed = vec![vec![true; c as usize + 1]; c as usize];
    for b in s.box_ids() {
        let members: Vec<MovementId> = s.members(b).map(|(m, _)| m).collect();
        for &m in &members {
            let Some(k) = s.secondary_index(m) else { continue };
            for &other in &members {
                if s.is_primary(other) {
                    allowed[k][other.0 as usize] = false;
                }
            }
        }
    }
    let permitted: Vec<Vec<ClassLabel>> = allowed
        .iter()
        .map(|row| (1..=c).filter(|&j| row[j as usize]).collect())
        .collect();
    ConstraintTable::from_permitted(c, permitted)
}

/// The feasible bindings in lexicographic order of `s(C)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibleSet {
    num_classes: u32,
    bindings: Vec<Binding>,
}

impl FeasibleSet {
    pub fn num_classes(&self) -> u32 {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn bindings(&self) -> &[Binding] {
        &self.bindings
    }

    pub fn get(&self, i: usize) -> Option<&Binding> {
        self.bindings.get(i)
    }

    pub fn index_of(&self, b: &Binding) -> Option<usize> {
        self.bindings.binary_search(b).ok()
    }

    pub fn contains(&self, b: &Binding) -> bool {
        self.index_of(b).is_some()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Binding> {
        self.bindings.iter()
    }

    pub fn into_vec(self) -> Vec<Binding> {
        self.bindings
    }
}

impl<'a> IntoIterator for &'a FeasibleSet {
    type Item = &'a Binding;
    type IntoIter = core::slice::Iter<'a, Binding>;

    fn into_iter(self) -> Self::IntoIter {
        self.bindings.iter()
    }
}

/// All permutations allowed by `t`, built position by position: the tuples
/// for `m_{C+1}..m_{C+k}` are extended by every permitted class still unused.
pub fn enumerate_feasible(t: &ConstraintTable) -> FeasibleSet {
    match build(t, usize::MAX) {
        Ok(set) => set,
        Err(_) => unreachable!("unbounded enumeration"),
    }
}

/// As [`enumerate_feasible`], failing once any stage holds more than `limit`
/// tuples.
pub fn enumerate_feasible_bounded(t: &ConstraintTable, limit: usize) -> Result<FeasibleSet, ContextError> {
    build(t, limit)
}

fn build(t: &ConstraintTable, limit: usize) -> Result<FeasibleSet, ContextError> {
    let c = t.num_classes as usize;
    let mut partial: Vec<Vec<ClassLabel>> = vec![Vec::new()];
    for k in 0..c {
        let mut next = Vec::new();
        for prefix in &partial {
            for &class in t.permitted(k) {
                if prefix.contains(&class) {
                    continue;
                }
                let mut tuple = Vec::with_capacity(c);
                tuple.extend_from_slice(prefix);
                tuple.push(class);
                next.push(tuple);
                if next.len() > limit {
                    return Err(ContextError::TooManySolutions { limit });
                }
            }
        }
        partial = next;
        if partial.is_empty() {
            break;
        }
    }
    let bindings = if c == 0 {
        Vec::new()
    } else {
        partial.into_iter().map(|secondary| Binding { secondary }).collect()
    };
    Ok(FeasibleSet {
        num_classes: t.num_classes,
        bindings,
    })
}

/// Number of class sets available to a box of `box_size` movements whose
/// closer class is fixed: `binom(C-1, M_l-1)`.
pub fn combinations_cardinality(num_classes: u32, box_size: u32) -> Result<u64, ContextError> {
    if box_size == 0 || box_size > num_classes {
        return Err(ContextError::OutOfRange { num_classes, box_size });
    }
    let n = u64::from(num_classes - 1);
    let k = u64::from((box_size - 1).min(num_classes - box_size));
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    Ok(acc)
}

/// Every class set of size `box_size` that contains `reserved`, in
/// lexicographic order.
pub fn box_class_family(
    num_classes: u32,
    box_size: u32,
    reserved: ClassLabel,
) -> Result<Vec<Vec<ClassLabel>>, ContextError> {
    combinations_cardinality(num_classes, box_size)?;
    if reserved == 0 || reserved > num_classes {
        return Err(ContextError::OutOfRange { num_classes, box_size });
    }
    let others: Vec<ClassLabel> = (1..=num_classes).filter(|&c| c != reserved).collect();
    let pick = (box_size - 1) as usize;
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..pick).collect();
    loop {
        let mut set: Vec<ClassLabel> = idx.iter().map(|&i| others[i]).collect();
        set.push(reserved);
        set.sort_unstable();
        out.push(set);
        // advance the combination index
        let mut i = pick;
        loop {
            if i == 0 {
                out.sort();
                return Ok(out);
            }
            i -= 1;
            if idx[i] < others.len() - pick + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..pick {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
