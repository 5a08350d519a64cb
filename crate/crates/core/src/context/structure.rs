use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::{BoxId, ContextError, MovementId, MovementRole};
use crate::ClassLabel;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MovementDef {
    pub id: u32,
    #[serde(default)]
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxDef {
    pub id: u32,
    pub parent: Option<u32>,
    pub opens_with_movement: Option<u32>,
    /// Normally omitted: the closer is the opener performed in reverse.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closes_with_movement: Option<u32>,
    pub internal_movements: Vec<u32>,
}

/// Box structure as authored on disk, before validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureDef {
    pub num_classes: u32,
    pub movements: Vec<MovementDef>,
    pub boxes: Vec<BoxDef>,
}

/// `(id, parent, opener, internal movements)`.
pub type BoxSpec<'a> = (u32, Option<u32>, Option<u32>, &'a [u32]);

impl StructureDef {
    /// Definition with movements `m1..m2C` and boxes given as
    /// `(id, parent, opener, internal movements)`.
    pub fn with_boxes(num_classes: u32, boxes: &[BoxSpec<'_>]) -> Self {
        Self {
            num_classes,
            movements: (1..=2 * num_classes)
                .map(|id| MovementDef {
                    id,
                    name: alloc::format!("movement {id}"),
                })
                .collect(),
            boxes: boxes
                .iter()
                .map(|&(id, parent, opener, internal)| BoxDef {
                    id,
                    parent,
                    opens_with_movement: opener,
                    closes_with_movement: None,
                    internal_movements: internal.to_vec(),
                })
                .collect(),
        }
    }

    /// Shorthand for tests: same as [`StructureDef::with_boxes`].
    #[cfg(test)]
    pub(crate) fn simple(num_classes: u32, boxes: &[BoxSpec<'_>]) -> Self {
        Self::with_boxes(num_classes, boxes)
    }
}

/// A reason a [`StructureDef`] is rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    NoClasses,
    MovementCount {
        expected: u32,
        found: u32,
    },
    DuplicateMovement(u32),
    MovementIdOutOfRange(u32),
    DuplicateBoxId(u32),
    NoRoot,
    MultipleRoots(Vec<u32>),
    RootHasOpener(u32),
    MissingOpener(u32),
    UnknownParent {
        box_id: u32,
        parent: u32,
    },
    NotATree(u32),
    UnknownMovement {
        box_id: u32,
        movement: u32,
    },
    DuplicateMovementInBox {
        box_id: u32,
        movement: u32,
    },
    EmptyBox(u32),
    OpenerNotInParent {
        box_id: u32,
        movement: u32,
    },
    AmbiguousOpener {
        parent: u32,
        movement: u32,
    },
    /// Closer bound to a different class than the opener.
    Assumption2 {
        box_id: u32,
        opener: u32,
        closer: u32,
    },
    /// Initial box lacks the primary movement of a class.
    Assumption3 {
        class: ClassLabel,
    },
    SecondaryInRoot(u32),
    BoxTooLarge {
        box_id: u32,
        size: u32,
        num_classes: u32,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NoClasses => write!(f, "num_classes must be positive"),
            MovementCount { expected, found } => {
                write!(f, "expected M = 2C = {expected} movements, found {found}")
            }
            DuplicateMovement(m) => write!(f, "movement id {m} declared twice"),
            MovementIdOutOfRange(m) => write!(f, "movement id {m} outside 1..=M"),
            DuplicateBoxId(b) => write!(f, "box id {b} declared twice"),
            NoRoot => write!(f, "no initial box (a box without parent)"),
            MultipleRoots(ids) => write!(f, "several boxes without parent: {ids:?}"),
            RootHasOpener(b) => write!(f, "initial box {b} must not have an opening movement"),
            MissingOpener(b) => write!(f, "box {b} has no opening movement"),
            UnknownParent { box_id, parent } => write!(f, "box {box_id}: unknown parent {parent}"),
            NotATree(b) => write!(f, "box {b} is not reachable from the initial box"),
            UnknownMovement { box_id, movement } => {
                write!(f, "box {box_id}: unknown movement {movement}")
            }
            DuplicateMovementInBox { box_id, movement } => {
                write!(f, "box {box_id}: movement {movement} appears twice")
            }
            EmptyBox(b) => write!(f, "box {b} has no internal movements"),
            OpenerNotInParent { box_id, movement } => {
                write!(f, "box {box_id}: opener m{movement} is not performed in its parent box")
            }
            AmbiguousOpener { parent, movement } => {
                write!(f, "box {parent}: m{movement} opens more than one box")
            }
            Assumption2 {
                box_id,
                opener,
                closer,
            } => write!(
                f,
                "Assumption2: box {box_id} closes with m{closer} but opens with m{opener}; both must bind the same class"
            ),
            Assumption3 { class } => write!(
                f,
                "Assumption3: initial box lacks primary movement m{class} of class {class}"
            ),
            SecondaryInRoot(m) => {
                write!(f, "initial box holds secondary movement m{m}; it interprets classes by the primary map only")
            }
            BoxTooLarge {
                box_id,
                size,
                num_classes,
            } => write!(f, "box {box_id} holds {size} movements but only {num_classes} classes exist"),
        }
    }
}

/// Check a definition against the structural assumptions; empty means valid.
pub fn validate_structure(def: &StructureDef) -> Vec<Violation> {
    let mut v = Vec::new();
    let c = def.num_classes;
    if c == 0 {
        v.push(Violation::NoClasses);
        return v;
    }
    let m_total = 2 * c;
    if def.movements.len() as u32 != m_total {
        v.push(Violation::MovementCount {
            expected: m_total,
            found: def.movements.len() as u32,
        });
    }
    let mut seen = vec![false; m_total as usize + 1];
    for m in &def.movements {
        if m.id == 0 || m.id > m_total {
            v.push(Violation::MovementIdOutOfRange(m.id));
        } else if seen[m.id as usize] {
            v.push(Violation::DuplicateMovement(m.id));
        } else {
            seen[m.id as usize] = true;
        }
    }
    let known = |m: u32| m >= 1 && m <= m_total && seen[m as usize];

    let mut by_id: BTreeMap<u32, usize> = BTreeMap::new();
    for (i, b) in def.boxes.iter().enumerate() {
        if by_id.insert(b.id, i).is_some() {
            v.push(Violation::DuplicateBoxId(b.id));
        }
    }
    let roots: Vec<u32> = def.boxes.iter().filter(|b| b.parent.is_none()).map(|b| b.id).collect();
    match roots.len() {
        0 => v.push(Violation::NoRoot),
        1 => {}
        _ => v.push(Violation::MultipleRoots(roots.clone())),
    }

    for b in &def.boxes {
        match (b.parent, b.opens_with_movement) {
            (None, Some(_)) => v.push(Violation::RootHasOpener(b.id)),
            (Some(_), None) => v.push(Violation::MissingOpener(b.id)),
            _ => {}
        }
        if let Some(p) = b.parent {
            if !by_id.contains_key(&p) {
                v.push(Violation::UnknownParent {
                    box_id: b.id,
                    parent: p,
                });
            }
        }
        let mut members: Vec<u32> = b.opens_with_movement.into_iter().collect();
        members.extend(&b.internal_movements);
        let mut local = Vec::new();
        for &m in &members {
            if !known(m) {
                v.push(Violation::UnknownMovement {
                    box_id: b.id,
                    movement: m,
                });
            } else if local.contains(&m) {
                v.push(Violation::DuplicateMovementInBox {
                    box_id: b.id,
                    movement: m,
                });
            } else {
                local.push(m);
            }
        }
        if b.parent.is_some() && b.internal_movements.is_empty() {
            v.push(Violation::EmptyBox(b.id));
        }
        if let (Some(op), Some(cl)) = (b.opens_with_movement, b.closes_with_movement) {
            if op != cl {
                v.push(Violation::Assumption2 {
                    box_id: b.id,
                    opener: op,
                    closer: cl,
                });
            }
        }
        if members.len() as u32 > c {
            v.push(Violation::BoxTooLarge {
                box_id: b.id,
                size: members.len() as u32,
                num_classes: c,
            });
        }
    }

    if let [root_id] = roots.as_slice() {
        let root = &def.boxes[by_id[root_id]];
        for class in 1..=c {
            if !root.internal_movements.contains(&class) {
                v.push(Violation::Assumption3 { class });
            }
        }
        for &m in &root.internal_movements {
            if m > c && m <= m_total {
                v.push(Violation::SecondaryInRoot(m));
            }
        }
        // reachability from the root through parent links
        for b in &def.boxes {
            let mut at = b;
            let mut steps = 0;
            while let Some(p) = at.parent {
                match by_id.get(&p) {
                    Some(&i) if steps <= def.boxes.len() => {
                        at = &def.boxes[i];
                        steps += 1;
                    }
                    _ => break,
                }
            }
            if (at.id != *root_id || at.parent.is_some())
                && !v
                    .iter()
                    .any(|x| matches!(x, Violation::UnknownParent { box_id, .. } if *box_id == b.id))
            {
                v.push(Violation::NotATree(b.id));
            }
        }
    }

    for b in &def.boxes {
        let (Some(p), Some(op)) = (b.parent, b.opens_with_movement) else {
            continue;
        };
        let Some(&pi) = by_id.get(&p) else { continue };
        let parent = &def.boxes[pi];
        if !parent.internal_movements.contains(&op) {
            v.push(Violation::OpenerNotInParent {
                box_id: b.id,
                movement: op,
            });
        }
        let twins = def
            .boxes
            .iter()
            .filter(|o| o.parent == Some(p) && o.opens_with_movement == Some(op))
            .count();
        let first = def
            .boxes
            .iter()
            .find(|o| o.parent == Some(p) && o.opens_with_movement == Some(op))
            .map(|o| o.id);
        if twins > 1 && first == Some(b.id) {
            v.push(Violation::AmbiguousOpener {
                parent: p,
                movement: op,
            });
        }
    }

    v
}

/// A box of a validated structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoxNode {
    /// Identifier declared in the definition.
    pub label: u32,
    pub parent: Option<BoxId>,
    pub opener: Option<MovementId>,
    pub internal: Vec<MovementId>,
    pub children: Vec<BoxId>,
}

impl BoxNode {
    /// `M_l`: internal movements plus the closer (root: internal only).
    pub fn size(&self) -> usize {
        self.internal.len() + usize::from(self.opener.is_some())
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Validated box tree. The initial box is `BoxId(0)`; other boxes keep their
/// declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "StructureDef", into = "StructureDef")]
pub struct ContextStructure {
    def: StructureDef,
    names: Vec<String>,
    nodes: Vec<BoxNode>,
}

impl TryFrom<StructureDef> for ContextStructure {
    type Error = ContextError;

    fn try_from(def: StructureDef) -> Result<Self, Self::Error> {
        ContextStructure::new(def)
    }
}

impl From<ContextStructure> for StructureDef {
    fn from(s: ContextStructure) -> Self {
        s.def
    }
}

impl ContextStructure {
    pub fn new(def: StructureDef) -> Result<Self, ContextError> {
        let violations = validate_structure(&def);
        if !violations.is_empty() {
            return Err(ContextError::Invalid(violations));
        }
        let mut order: Vec<usize> = (0..def.boxes.len()).collect();
        let root_pos = def
            .boxes
            .iter()
            .position(|b| b.parent.is_none())
            .expect("validated root");
        order.remove(root_pos);
        order.insert(0, root_pos);
        let index_of: BTreeMap<u32, BoxId> = order
            .iter()
            .enumerate()
            .map(|(i, &src)| (def.boxes[src].id, BoxId(i)))
            .collect();
        let mut nodes: Vec<BoxNode> = order
            .iter()
            .map(|&src| {
                let b = &def.boxes[src];
                BoxNode {
                    label: b.id,
                    parent: b.parent.map(|p| index_of[&p]),
                    opener: b.opens_with_movement.map(MovementId),
                    internal: b.internal_movements.iter().copied().map(MovementId).collect(),
                    children: Vec::new(),
                }
            })
            .collect();
        for i in 1..nodes.len() {
            let parent = nodes[i].parent.expect("non-root box has parent");
            nodes[parent.0].children.push(BoxId(i));
        }
        // children in the order their openers appear inside the parent
        for i in 0..nodes.len() {
            let internal = nodes[i].internal.clone();
            let mut kids = core::mem::take(&mut nodes[i].children);
            kids.sort_by_key(|k| {
                let op = nodes[k.0].opener.expect("child has opener");
                internal.iter().position(|&m| m == op)
            });
            nodes[i].children = kids;
        }
        let mut names = vec![String::new(); 2 * def.num_classes as usize];
        for m in &def.movements {
            names[(m.id - 1) as usize] = if m.name.is_empty() {
                alloc::format!("m{}", m.id)
            } else {
                m.name.clone()
            };
        }
        Ok(Self { def, names, nodes })
    }

    pub fn definition(&self) -> &StructureDef {
        &self.def
    }

    pub fn num_classes(&self) -> u32 {
        self.def.num_classes
    }

    pub fn num_movements(&self) -> u32 {
        2 * self.def.num_classes
    }

    /// `L`: number of boxes excluding the initial one.
    pub fn box_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[BoxNode] {
        &self.nodes
    }

    pub fn node(&self, id: BoxId) -> Option<&BoxNode> {
        self.nodes.get(id.0)
    }

    pub fn box_ids(&self) -> impl Iterator<Item = BoxId> {
        (0..self.nodes.len()).map(BoxId)
    }

    pub fn movement_name(&self, m: MovementId) -> &str {
        self.names
            .get((m.0 as usize).wrapping_sub(1))
            .map_or("?", String::as_str)
    }

    pub fn is_primary(&self, m: MovementId) -> bool {
        m.0 >= 1 && m.0 <= self.num_classes()
    }

    /// Index `k` (0-based) of a secondary movement `m_{C+k+1}`.
    pub fn secondary_index(&self, m: MovementId) -> Option<usize> {
        let c = self.num_classes();
        (m.0 > c && m.0 <= 2 * c).then(|| (m.0 - c - 1) as usize)
    }

    /// Nesting depth (box order); the initial box has order 0.
    pub fn depth(&self, id: BoxId) -> usize {
        let mut d = 0;
        let mut at = id;
        while let Some(p) = self.nodes[at.0].parent {
            d += 1;
            at = p;
        }
        d
    }

    /// Box ids from the initial box down to `id`.
    pub fn path_to(&self, id: BoxId) -> Vec<BoxId> {
        let mut path = vec![id];
        let mut at = id;
        while let Some(p) = self.nodes[at.0].parent {
            path.push(p);
            at = p;
        }
        path.reverse();
        path
    }

    /// Boxes without nested boxes, in depth-first declaration order.
    pub fn leaves(&self) -> Vec<BoxId> {
        let mut out = Vec::new();
        let mut stack = vec![BoxId::ROOT];
        while let Some(b) = stack.pop() {
            let node = &self.nodes[b.0];
            if node.is_leaf() {
                out.push(b);
            }
            stack.extend(node.children.iter().rev());
        }
        out
    }

    /// Child of `parent` opened by `m`, if any.
    pub fn child_opened_by(&self, parent: BoxId, m: MovementId) -> Option<BoxId> {
        self.nodes[parent.0]
            .children
            .iter()
            .copied()
            .find(|c| self.nodes[c.0].opener == Some(m))
    }

    /// Movements performed inside a box with their role: the closer first
    /// (non-root boxes), then the internal movements in declaration order.
    pub fn members(&self, id: BoxId) -> impl Iterator<Item = (MovementId, MovementRole)> + '_ {
        let node = &self.nodes[id.0];
        node.opener
            .map(|m| (m, MovementRole::ClosesThisBox))
            .into_iter()
            .chain(node.internal.iter().map(move |&m| {
                let role = match self.child_opened_by(id, m) {
                    Some(child) => MovementRole::OpensNestedBox(child),
                    None => MovementRole::Internal,
                };
                (m, role)
            }))
    }

    /// Role of `m` inside box `id`, or `None` if it is not performed there.
    pub fn role_of(&self, id: BoxId, m: MovementId) -> Option<MovementRole> {
        self.members(id).find(|(x, _)| *x == m).map(|(_, r)| r)
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    fn violations(def: &StructureDef) -> Vec<Violation> {
        validate_structure(def)
    }

    #[test]
    fn example_structure_is_valid() {
        let s = example1();
        assert_eq!(s.num_classes(), 5);
        assert_eq!(s.num_movements(), 10);
        assert_eq!(s.box_count(), 4);
        assert_eq!(s.leaves(), vec![BoxId(3), BoxId(4)]);
        assert_eq!(s.depth(BoxId(3)), 2);
        assert_eq!(s.path_to(BoxId(3)), vec![BoxId(0), BoxId(1), BoxId(3)]);
        assert_eq!(
            s.role_of(BoxId(1), MovementId(7)),
            Some(MovementRole::OpensNestedBox(BoxId(3)))
        );
        assert_eq!(s.role_of(BoxId(1), MovementId(1)), Some(MovementRole::ClosesThisBox));
        assert_eq!(s.role_of(BoxId(1), MovementId(6)), Some(MovementRole::Internal));
        assert_eq!(s.role_of(BoxId(1), MovementId(9)), None);
    }

    #[test]
    fn closer_mismatch_is_assumption2() {
        let mut def = example1_def();
        def.boxes[1].closes_with_movement = Some(2);
        assert!(violations(&def).iter().any(|v| matches!(
            v,
            Violation::Assumption2 {
                opener: 1,
                closer: 2,
                ..
            }
        )));
        // naming the opener itself as closer is fine
        def.boxes[1].closes_with_movement = Some(1);
        assert!(violations(&def).is_empty());
    }

    #[test]
    fn missing_primary_is_assumption3() {
        let mut def = example1_def();
        def.boxes[0].internal_movements.retain(|&m| m != 3);
        let v = violations(&def);
        assert!(v.contains(&Violation::Assumption3 { class: 3 }), "{v:?}");
    }

    #[test]
    fn tree_and_membership_errors() {
        let mut def = example1_def();
        def.boxes[4].parent = Some(99);
        assert!(violations(&def).contains(&Violation::UnknownParent { box_id: 4, parent: 99 }));

        let mut def = example1_def();
        def.boxes[4].opens_with_movement = Some(10);
        assert!(violations(&def).contains(&Violation::OpenerNotInParent {
            box_id: 4,
            movement: 10
        }));

        let mut def = example1_def();
        def.boxes[1].parent = Some(3);
        assert!(violations(&def).iter().any(|v| matches!(v, Violation::NotATree(_))));

        let mut def = example1_def();
        def.movements.pop();
        assert!(violations(&def).contains(&Violation::MovementCount { expected: 10, found: 9 }));

        let mut def = example1_def();
        def.boxes[0].internal_movements.push(6);
        assert!(violations(&def).contains(&Violation::SecondaryInRoot(6)));

        let mut def = example1_def();
        def.boxes[2].internal_movements.clear();
        let v = violations(&def);
        assert!(v.contains(&Violation::EmptyBox(2)));
    }

    #[test]
    fn oversized_box() {
        let def = StructureDef::with_boxes(3, &[(0, None, None, &[1, 2, 3]), (1, Some(0), Some(1), &[2, 4, 5, 6])]);
        assert!(violations(&def).contains(&Violation::BoxTooLarge {
            box_id: 1,
            size: 5,
            num_classes: 3
        }));
    }

    #[test]
    fn json_like_round_trip_through_def() {
        let s = example1();
        let again = ContextStructure::new(s.definition().clone()).unwrap();
        assert_eq!(s, again);
    }
}
