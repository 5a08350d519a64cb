use super::{ContextStructure, StructureDef};

pub(crate) fn example1_def() -> StructureDef {
    StructureDef::simple(
        5,
        &[
            (0, None, None, &[1, 2, 3, 4, 5]),
            (1, Some(0), Some(1), &[6, 7, 2]),
            (2, Some(0), Some(3), &[8, 9, 4]),
            (3, Some(1), Some(7), &[10, 5]),
            (4, Some(2), Some(4), &[2]),
        ],
    )
}

pub(crate) fn example1() -> ContextStructure {
    ContextStructure::new(example1_def()).unwrap()
}

pub(crate) fn c6_structure() -> ContextStructure {
    ContextStructure::new(StructureDef::simple(
        6,
        &[
            (0, None, None, &[1, 2, 3, 4, 5, 6]),
            (1, Some(0), Some(1), &[7, 8, 2]),
            (2, Some(0), Some(3), &[9, 10, 4]),
            (3, Some(1), Some(8), &[11, 5]),
            (4, Some(2), Some(4), &[12, 6]),
        ],
    ))
    .unwrap()
}

/// Valid tree in which m6 shares boxes with all five primary classes.
pub(crate) fn pigeonhole_def() -> StructureDef {
    StructureDef::simple(
        5,
        &[
            (0, None, None, &[1, 2, 3, 4, 5]),
            (1, Some(0), Some(1), &[2, 3, 6]),
            (2, Some(0), Some(4), &[5, 6]),
            (3, Some(0), Some(2), &[7, 8, 9, 10]),
        ],
    )
}
