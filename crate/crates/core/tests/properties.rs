use boxctx_core::context::{derive_constraints, enumerate_feasible, is_feasible, Binding, ContextStructure};
use boxctx_core::evaluation::{rank_descending, sqcov_metric, zo_metric, SequenceOutcome};
use boxctx_core::optimizer::{insert_move, kendall_tau, mutate, ox1_child, ox2_child, repair, Mutation};
use boxctx_core::rng::rng_from_seed;
use boxctx_core::signal::{segment, stratified_assignment, SignalRecord, SignalSet};
use boxctx_core::synth::random_structure;
use boxctx_core::ClassLabel;
use proptest::prelude::*;

fn permutation(n: usize) -> impl Strategy<Value = Vec<ClassLabel>> {
    Just((1..=n as ClassLabel).collect::<Vec<_>>()).prop_shuffle()
}

fn is_perm(p: &[ClassLabel]) -> bool {
    let mut s = p.to_vec();
    s.sort_unstable();
    s.iter().enumerate().all(|(i, &v)| v == i as ClassLabel + 1)
}

fn all_perms(n: u32) -> Vec<Vec<ClassLabel>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in all_perms(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n);
            out.push(q);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn enumeration_matches_filtering(c in 2u32..=5, seed in any::<u64>()) {
        let def = random_structure(c, 4, 3, &mut rng_from_seed(seed));
        let s = ContextStructure::new(def).unwrap();
        let mut brute: Vec<Binding> = all_perms(c)
            .into_iter()
            .map(|p| Binding::new(p).unwrap())
            .filter(|b| is_feasible(&s, b))
            .collect();
        brute.sort();
        let found = derive_constraints(&s).map(|t| enumerate_feasible(&t).into_vec()).unwrap_or_default();
        prop_assert_eq!(found, brute);
    }

    #[test]
    fn crossover_children_are_permutations(
        (a, b, lo, hi, picked) in (2usize..9).prop_flat_map(|n| (
            permutation(n),
            permutation(n),
            0..n,
            0..n,
            proptest::collection::vec(0..n, 0..n),
        ))
    ) {
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        let child = ox1_child(&a, &b, lo, hi);
        prop_assert!(is_perm(&child));
        prop_assert_eq!(&child[lo..=hi], &a[lo..=hi]);
        let mut picked = picked;
        picked.sort_unstable();
        picked.dedup();
        prop_assert!(is_perm(&ox2_child(&a, &b, &picked)));
        prop_assert_eq!(ox1_child(&a, &a, lo, hi), a.clone());
    }

    #[test]
    fn mutations_preserve_permutations(p in (1usize..9).prop_flat_map(permutation), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        for op in Mutation::ALL {
            prop_assert!(is_perm(&mutate(op, &p, &mut rng)));
        }
    }

    #[test]
    fn insert_move_places_element(p in (2usize..9).prop_flat_map(permutation), i in 0usize..8, j in 0usize..8) {
        let (from, to) = (i % p.len(), j % p.len());
        let mut q = p.clone();
        insert_move(&mut q, from, to);
        prop_assert_eq!(q[to], p[from]);
        prop_assert!(kendall_tau(&p, &q).unwrap() as usize == from.abs_diff(to));
    }

    #[test]
    fn kendall_tau_triangle(
        (a, b, c) in (1usize..8).prop_flat_map(|n| (permutation(n), permutation(n), permutation(n)))
    ) {
        let d = |x: &[ClassLabel], y: &[ClassLabel]| kendall_tau(x, y).unwrap();
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
        prop_assert_eq!(d(&a, &b) == 0, a == b);
    }

    #[test]
    fn repair_returns_nearest_feasible(c in 3u32..=5, seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let s = ContextStructure::new(random_structure(c, 3, 2, &mut rng_from_seed(seed))).unwrap();
        let Ok(t) = derive_constraints(&s) else { return Ok(()); };
        let fs = enumerate_feasible(&t);
        let perms = all_perms(c);
        let cand = pick.get(&perms);
        if fs.is_empty() {
            prop_assert!(repair(cand, &fs).is_err());
            return Ok(());
        }
        let (b, d) = repair(cand, &fs).unwrap();
        prop_assert!(is_feasible(&s, &b));
        let best = fs.iter().map(|x| kendall_tau(cand, x.secondary()).unwrap()).min().unwrap();
        prop_assert_eq!(d, best);
    }

    #[test]
    fn sqcov_dominates_zo(hits in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 1..12), 1..30)) {
        let outcomes: Vec<SequenceOutcome> = hits.into_iter().map(|h| SequenceOutcome::from_hits(h).unwrap()).collect();
        let zo = zo_metric(&outcomes).unwrap();
        let sq = sqcov_metric(&outcomes).unwrap();
        prop_assert!((0.0..=1.0).contains(&zo) && (0.0..=1.0).contains(&sq));
        prop_assert!(sq >= zo);
    }

    #[test]
    fn ranks_sum_to_triangular(v in proptest::collection::vec(0u8..5, 1..12)) {
        let x: Vec<f64> = v.iter().map(|&a| a as f64).collect();
        let r = rank_descending(&x);
        let n = x.len() as f64;
        prop_assert!((r.iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-9);
        for i in 0..x.len() {
            for j in 0..x.len() {
                if x[i] > x[j] {
                    prop_assert!(r[i] > r[j]);
                }
            }
        }
    }

    #[test]
    fn stratified_assignment_is_balanced(
        counts in proptest::collection::vec(10usize..40, 2..5),
        k in 2usize..10,
        seed in any::<u64>(),
    ) {
        let labels: Vec<ClassLabel> = counts
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(c as ClassLabel + 1, n))
            .collect();
        let fold_of = stratified_assignment(&labels, counts.len() as u32, k, seed).unwrap();
        prop_assert_eq!(&fold_of, &stratified_assignment(&labels, counts.len() as u32, k, seed).unwrap());
        for c in 1..=counts.len() as ClassLabel {
            let mut per = vec![0usize; k];
            for (i, &f) in fold_of.iter().enumerate() {
                if labels[i] == c {
                    per[f] += 1;
                }
            }
            prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn segmentation_reproduces_prefix(len in 16usize..400, window_ms in 8u32..100) {
        let ch: Vec<f64> = (0..len).map(|i| (i as f64).sin()).collect();
        let rec = SignalRecord::new("r", vec![ch.clone(), ch.clone()], 1000, 1).unwrap();
        let set = SignalSet::new(vec![rec], 1).unwrap();
        let window = window_ms as usize;
        match segment(&set, window_ms) {
            Ok(out) => {
                prop_assert_eq!(out.len(), len / window);
                let joined: Vec<f64> = out.records().iter().flat_map(|r| r.channels()[0].clone()).collect();
                prop_assert_eq!(&joined[..], &ch[..(len / window) * window]);
            }
            Err(_) => prop_assert!(window < 16 || window > len),
        }
    }
}
