use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::OptimizerError;
use crate::context::{Binding, FeasibleSet};
use crate::ClassLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Crossover {
    Ox1,
    Ox2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mutation {
    Swap,
    Insert,
    Scramble,
    Inversion,
}

impl Mutation {
    pub const ALL: [Mutation; 4] = [
        Mutation::Swap,
        Mutation::Insert,
        Mutation::Scramble,
        Mutation::Inversion,
    ];
}

fn positions(p: &[ClassLabel]) -> Option<Vec<usize>> {
    let n = p.len();
    let mut pos = vec![usize::MAX; n + 1];
    for (i, &v) in p.iter().enumerate() {
        let v = v as usize;
        if v == 0 || v > n || pos[v] != usize::MAX {
            return None;
        }
        pos[v] = i;
    }
    Some(pos)
}

/// Number of element pairs whose relative order differs between `p` and `q`.
pub fn kendall_tau(p: &[ClassLabel], q: &[ClassLabel]) -> Result<u64, OptimizerError> {
    if p.len() != q.len() {
        return Err(OptimizerError::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    positions(p).ok_or(OptimizerError::NotAPermutation)?;
    let pos_q = positions(q).ok_or(OptimizerError::NotAPermutation)?;
    let r: Vec<usize> = p.iter().map(|&v| pos_q[v as usize]).collect();
    let mut count = 0;
    for i in 0..r.len() {
        for j in i + 1..r.len() {
            if r[i] > r[j] {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// OX1 child: `a[lo..=hi]` kept in place, the other positions filled with
/// the remaining elements in the order they appear in `b`, both scans
/// starting just after `hi` and wrapping around.
pub fn ox1_child(a: &[ClassLabel], b: &[ClassLabel], lo: usize, hi: usize) -> Vec<ClassLabel> {
    let n = a.len();
    let mut child = vec![0; n];
    let mut taken = vec![false; n + 1];
    for i in lo..=hi {
        child[i] = a[i];
        taken[a[i] as usize] = true;
    }
    let mut slot = (hi + 1) % n;
    for step in 0..n {
        let v = b[(hi + 1 + step) % n];
        if taken[v as usize] {
            continue;
        }
        while (lo..=hi).contains(&slot) {
            slot = (slot + 1) % n;
        }
        child[slot] = v;
        taken[v as usize] = true;
        slot = (slot + 1) % n;
    }
    child
}

/// OX2 child: the elements found at `picked` positions of `b` are rewritten
/// into their slots in `a` following their order in `b`.
pub fn ox2_child(a: &[ClassLabel], b: &[ClassLabel], picked: &[usize]) -> Vec<ClassLabel> {
    let n = a.len();
    let mut chosen = vec![false; n + 1];
    let mut order: Vec<usize> = picked.to_vec();
    order.sort_unstable();
    order.dedup();
    let values: Vec<ClassLabel> = order.iter().map(|&i| b[i]).collect();
    for &v in &values {
        chosen[v as usize] = true;
    }
    let mut next = values.into_iter();
    a.iter()
        .map(|&v| {
            if chosen[v as usize] {
                next.next().unwrap_or(v)
            } else {
                v
            }
        })
        .collect()
}

fn segment<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (usize, usize) {
    let i = rng.gen_range(0..n);
    let j = rng.gen_range(0..n);
    (i.min(j), i.max(j))
}

/// Apply `op` to two parents, returning two children.
pub fn crossover<R: Rng + ?Sized>(
    op: Crossover,
    a: &[ClassLabel],
    b: &[ClassLabel],
    rng: &mut R,
) -> (Vec<ClassLabel>, Vec<ClassLabel>) {
    let n = a.len();
    if n < 2 {
        return (a.to_vec(), b.to_vec());
    }
    match op {
        Crossover::Ox1 => {
            let (lo, hi) = segment(n, rng);
            (ox1_child(a, b, lo, hi), ox1_child(b, a, lo, hi))
        }
        Crossover::Ox2 => {
            let picked: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
            (ox2_child(a, b, &picked), ox2_child(b, a, &picked))
        }
    }
}

/// Move the element at `from` so that it ends up at index `to`.
pub fn insert_move(p: &mut [ClassLabel], from: usize, to: usize) {
    if from < to {
        p[from..=to].rotate_left(1);
    } else if to < from {
        p[to..=from].rotate_right(1);
    }
}

pub fn mutate<R: Rng + ?Sized>(op: Mutation, p: &[ClassLabel], rng: &mut R) -> Vec<ClassLabel> {
    let mut out = p.to_vec();
    let n = out.len();
    if n < 2 {
        return out;
    }
    match op {
        Mutation::Swap => {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            out.swap(i, j);
        }
        Mutation::Insert => {
            let from = rng.gen_range(0..n);
            let to = rng.gen_range(0..n);
            insert_move(&mut out, from, to);
        }
        Mutation::Scramble => {
            let (lo, hi) = segment(n, rng);
            out[lo..=hi].shuffle(rng);
        }
        Mutation::Inversion => {
            let (lo, hi) = segment(n, rng);
            out[lo..=hi].reverse();
        }
    }
    out
}

/// Nearest feasible binding by Kendall tau; ties go to the
/// lexicographically smallest. Returns the binding and its distance.
pub fn repair(candidate: &[ClassLabel], feasible: &FeasibleSet) -> Result<(Binding, u64), OptimizerError> {
    if feasible.is_empty() {
        return Err(OptimizerError::EmptyFeasibleSet);
    }
    if let Ok(b) = Binding::new(candidate.to_vec()) {
        if feasible.contains(&b) {
            return Ok((b, 0));
        }
    }
    let mut best: Option<(&Binding, u64)> = None;
    for b in feasible {
        let d = kendall_tau(candidate, b.secondary())?;
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((b, d));
        }
    }
    let (b, d) = best.expect("nonempty feasible set");
    Ok((b.clone(), d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::{enumerate_feasible, ConstraintTable};
    use crate::rng::rng_from_seed;

    fn is_perm(p: &[ClassLabel]) -> bool {
        positions(p).is_some()
    }

    #[test]
    fn kendall_examples() {
        assert_eq!(kendall_tau(&[1, 2, 3], &[1, 2, 3]).unwrap(), 0);
        assert_eq!(kendall_tau(&[1, 2, 3], &[3, 2, 1]).unwrap(), 3);
        assert_eq!(kendall_tau(&[1, 2, 3, 4], &[2, 1, 4, 3]).unwrap(), 2);
        assert!(kendall_tau(&[1, 1, 3], &[1, 2, 3]).is_err());
        assert!(kendall_tau(&[1, 2], &[1, 2, 3]).is_err());
    }

    #[test]
    fn ox1_examples() {
        let a = [1, 2, 3, 4, 5];
        let b = [5, 4, 3, 2, 1];
        assert_eq!(ox1_child(&a, &b, 2, 3), vec![5, 2, 3, 4, 1]);
        assert_eq!(ox1_child(&a, &b, 0, 4), a.to_vec());
        assert_eq!(ox1_child(&a, &a, 1, 2), a.to_vec());
        // hand-worked: keep [3,4,5] from a, fill from b starting after the segment
        assert_eq!(
            ox1_child(&[1, 2, 3, 4, 5, 6, 7], &[7, 6, 5, 4, 3, 2, 1], 2, 4),
            vec![7, 6, 3, 4, 5, 2, 1]
        );
    }

    #[test]
    fn ox2_examples() {
        let a = [1, 2, 3, 4, 5];
        let b = [5, 4, 3, 2, 1];
        // b at positions 0 and 2 holds 5 and 3; in a they sit at slots 2 and 4
        assert_eq!(ox2_child(&a, &b, &[0, 2]), vec![1, 2, 5, 4, 3]);
        assert_eq!(ox2_child(&a, &a, &[0, 3, 4]), a.to_vec());
        assert_eq!(ox2_child(&a, &b, &[]), a.to_vec());
    }

    #[test]
    fn identical_parents_are_fixed_points() {
        let mut rng = rng_from_seed(3);
        let p = [3, 1, 4, 2, 5];
        for op in [Crossover::Ox1, Crossover::Ox2] {
            for _ in 0..20 {
                let (x, y) = crossover(op, &p, &p, &mut rng);
                assert_eq!(x, p.to_vec());
                assert_eq!(y, p.to_vec());
            }
        }
    }

    #[test]
    fn mutation_examples() {
        let mut rng = rng_from_seed(1);
        assert_eq!(mutate(Mutation::Swap, &[1], &mut rng), vec![1]);
        let mut q = [1, 2, 3, 4];
        insert_move(&mut q, 0, 2);
        assert_eq!(q, [2, 3, 1, 4]);
        let mut q = [1, 2, 3, 4];
        insert_move(&mut q, 3, 1);
        assert_eq!(q, [1, 4, 2, 3]);
    }

    #[test]
    fn full_inversion_reverses() {
        // the only segment of a length-2 chromosome that changes it is the full one
        let mut rng = rng_from_seed(9);
        let mut seen_reversed = false;
        for _ in 0..50 {
            let out = mutate(Mutation::Inversion, &[1, 2], &mut rng);
            assert!(out == vec![1, 2] || out == vec![2, 1]);
            seen_reversed |= out == vec![2, 1];
        }
        assert!(seen_reversed);
    }

    #[test]
    fn operators_keep_permutations() {
        let mut rng = rng_from_seed(11);
        for _ in 0..200 {
            let mut a: Vec<ClassLabel> = (1..=7).collect();
            let mut b = a.clone();
            a.shuffle(&mut rng);
            b.shuffle(&mut rng);
            for op in [Crossover::Ox1, Crossover::Ox2] {
                let (x, y) = crossover(op, &a, &b, &mut rng);
                assert!(is_perm(&x) && is_perm(&y));
            }
            for op in Mutation::ALL {
                assert!(is_perm(&mutate(op, &a, &mut rng)));
            }
        }
    }

    #[test]
    fn repair_examples() {
        let t = ConstraintTable::from_permitted(3, vec![vec![1, 3], vec![2], vec![1, 3]]).unwrap();
        let fs = enumerate_feasible(&t);
        assert_eq!(fs.len(), 2);
        let (b, d) = repair(&[2, 1, 3], &fs).unwrap();
        assert_eq!((b.secondary(), d), (&[1, 2, 3][..], 1));
        let (b, d) = repair(&[3, 2, 1], &fs).unwrap();
        assert_eq!((b.secondary(), d), (&[3, 2, 1][..], 0));

        let single = enumerate_feasible(&ConstraintTable::from_permitted(3, vec![vec![2], vec![3], vec![1]]).unwrap());
        assert_eq!(repair(&[1, 2, 3], &single).unwrap().0.secondary(), &[2, 3, 1]);
    }

    #[test]
    fn repair_tie_prefers_lexicographic_first() {
        // (2,1,3) and (1,3,2) are both one swap away from (1,2,3)
        let t = ConstraintTable::from_permitted(3, vec![vec![1, 2], vec![1, 3], vec![2, 3]]).unwrap();
        let fs = enumerate_feasible(&t);
        assert_eq!(fs.len(), 2);
        let d: Vec<u64> = fs
            .iter()
            .map(|b| kendall_tau(&[1, 2, 3], b.secondary()).unwrap())
            .collect();
        assert_eq!(d, vec![1, 1]);
        assert_eq!(repair(&[1, 2, 3], &fs).unwrap().0.secondary(), &[1, 3, 2]);
    }

    #[test]
    fn kendall_is_a_metric() {
        let all = enumerate_feasible(&ConstraintTable::unconstrained(4));
        for p in &all {
            for q in &all {
                let pq = kendall_tau(p.secondary(), q.secondary()).unwrap();
                assert_eq!(pq, kendall_tau(q.secondary(), p.secondary()).unwrap());
                assert_eq!(pq == 0, p == q);
                for r in &all {
                    let pr = kendall_tau(p.secondary(), r.secondary()).unwrap();
                    let rq = kendall_tau(r.secondary(), q.secondary()).unwrap();
                    assert!(pq <= pr + rq);
                }
            }
        }
    }
}
