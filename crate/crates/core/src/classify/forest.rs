use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_dim, Classifier, ClassifierError, TrainingData};
use crate::rng::{derive_seed, rng_from_seed, DetRng};
use crate::ClassLabel;

/// Minimum samples on each side of a split.
pub const MIN_SAMPLES_LEAF: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(ClassLabel),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// CART tree with Gini splits; nodes stored flat, root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    /// Tree that always answers `label`.
    pub fn constant(label: ClassLabel) -> Self {
        Self {
            nodes: vec![Node::Leaf(label)],
        }
    }

    pub fn predict(&self, x: &[f64]) -> ClassLabel {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf(label) => return *label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn grow(data: &TrainingData<'_>, sample: Vec<usize>, max_features: usize, rng: &mut DetRng) -> Self {
        let k = data.classes.len();
        let mut nodes = vec![Node::Leaf(0)];
        let mut pending = vec![(0usize, sample)];
        let mut features: Vec<usize> = (0..data.dim).collect();
        while let Some((slot, idx)) = pending.pop() {
            let counts = class_counts(data, &idx, k);
            let majority = data.classes[argmax_count(&counts)];
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            if pure || idx.len() < 2 * MIN_SAMPLES_LEAF {
                nodes[slot] = Node::Leaf(majority);
                continue;
            }
            let (chosen, _) = features.partial_shuffle(rng, max_features);
            let split =
                chosen
                    .iter()
                    .filter_map(|&f| best_split(data, &idx, f, k))
                    .fold(None::<SplitChoice>, |best, s| match best {
                        Some(b) if b.impurity <= s.impurity => Some(b),
                        _ => Some(s),
                    });
            let Some(split) = split else {
                nodes[slot] = Node::Leaf(majority);
                continue;
            };
            let (l, r): (Vec<usize>, Vec<usize>) = idx
                .iter()
                .partition(|&&i| data.rows[i][split.feature] <= split.threshold);
            let left = nodes.len();
            nodes.push(Node::Leaf(majority));
            nodes.push(Node::Leaf(majority));
            nodes[slot] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right: left + 1,
            };
            pending.push((left + 1, r));
            pending.push((left, l));
        }
        Self { nodes }
    }
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn class_counts(data: &TrainingData<'_>, idx: &[usize], k: usize) -> Vec<usize> {
    let mut counts = vec![0usize; k];
    for &i in idx {
        counts[data.class_idx[i]] += 1;
    }
    counts
}

fn argmax_count(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate().skip(1) {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

fn gini_sum(counts: &[usize], n: usize) -> f64 {
    // n * gini(counts)
    if n == 0 {
        return 0.0;
    }
    let sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
    n as f64 - sq / n as f64
}

fn best_split(data: &TrainingData<'_>, idx: &[usize], feature: usize, k: usize) -> Option<SplitChoice> {
    let mut order: Vec<usize> = idx.to_vec();
    order.sort_by(|&a, &b| data.rows[a][feature].total_cmp(&data.rows[b][feature]));
    let n = order.len();
    let mut left = vec![0usize; k];
    let mut right = class_counts(data, idx, k);
    let mut best: Option<SplitChoice> = None;
    for pos in 0..n - 1 {
        let c = data.class_idx[order[pos]];
        left[c] += 1;
        right[c] -= 1;
        let nl = pos + 1;
        let lo = data.rows[order[pos]][feature];
        let hi = data.rows[order[pos + 1]][feature];
        if nl < MIN_SAMPLES_LEAF || n - nl < MIN_SAMPLES_LEAF || lo >= hi {
            continue;
        }
        let impurity = gini_sum(&left, nl) + gini_sum(&right, n - nl);
        if best.as_ref().is_none_or(|b| impurity < b.impurity) {
            let mid = lo + (hi - lo) / 2.0;
            best = Some(SplitChoice {
                feature,
                threshold: if mid < hi { mid } else { lo },
                impurity,
            });
        }
    }
    best
}

/// Most frequent label; ties go to the smallest label.
pub fn majority_vote(votes: &[ClassLabel]) -> Option<ClassLabel> {
    let mut sorted = votes.to_vec();
    sorted.sort_unstable();
    let mut best: Option<(ClassLabel, usize)> = None;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        if best.is_none_or(|(_, n)| j - i > n) {
            best = Some((sorted[i], j - i));
        }
        i = j;
    }
    best.map(|(label, _)| label)
}

/// Bagged Gini trees with sqrt(d) candidate features per split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    classes: Vec<ClassLabel>,
    dim: usize,
    trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub(crate) fn fit(data: &TrainingData<'_>, n_trees: usize, seed: u64) -> Self {
        let n = data.rows.len();
        let max_features = (libm::sqrt(data.dim as f64) as usize).clamp(1, data.dim.max(1));
        let trees = (0..n_trees)
            .map(|t| {
                let mut rng = rng_from_seed(derive_seed(seed, t as u64));
                let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                DecisionTree::grow(data, sample, max_features, &mut rng)
            })
            .collect();
        Self {
            classes: data.classes.clone(),
            dim: data.dim,
            trees,
        }
    }

    /// Assemble a forest from prebuilt trees.
    pub fn from_trees(classes: Vec<ClassLabel>, dim: usize, trees: Vec<DecisionTree>) -> Self {
        Self { classes, dim, trees }
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }
}

impl Classifier for RandomForest {
    fn classes(&self) -> &[ClassLabel] {
        &self.classes
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn predict(&self, x: &[f64]) -> Result<ClassLabel, ClassifierError> {
        check_dim(self.dim, x)?;
        let votes: Vec<ClassLabel> = self.trees.iter().map(|t| t.predict(x)).collect();
        majority_vote(&votes).ok_or(ClassifierError::NoTrees)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{train, Algorithm, ClassifierSpec};

    #[test]
    fn tie_goes_to_smallest_label() {
        let mut trees: Vec<DecisionTree> = (0..10).map(|_| DecisionTree::constant(5)).collect();
        trees.extend((0..10).map(|_| DecisionTree::constant(2)));
        let f = RandomForest::from_trees(vec![2, 5], 1, trees);
        assert_eq!(f.predict(&[0.0]).unwrap(), 2);
        assert_eq!(majority_vote(&[3, 1, 3, 1, 2]), Some(1));
        assert_eq!(majority_vote(&[]), None);
    }

    #[test]
    fn same_seed_same_predictions() {
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| vec![(i % 7) as f64, (i * 3 % 11) as f64, (i % 5) as f64 * 0.5])
            .collect();
        let labels: Vec<ClassLabel> = (0..60).map(|i| (i % 3) as u32 + 1).collect();
        let spec = ClassifierSpec::new(Algorithm::RandomForest).with_seed(17);
        let a = train(&spec, &rows, &labels).unwrap();
        let b = train(&spec, &rows, &labels).unwrap();
        assert_eq!(a, b);
        for i in 0..40 {
            let probe = [i as f64 * 0.3, (i % 9) as f64, 1.0];
            assert_eq!(a.predict(&probe).unwrap(), b.predict(&probe).unwrap());
        }
    }

    #[test]
    fn leaves_hold_at_least_two_samples() {
        // a single outlier cannot be isolated in its own leaf
        let mut rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        rows.push(vec![100.0]);
        let mut labels = vec![1; 10];
        labels.push(2);
        let data = TrainingData::check(&rows, &labels).unwrap();
        let mut rng = rng_from_seed(0);
        let tree = DecisionTree::grow(&data, (0..11).collect(), 1, &mut rng);
        assert_eq!(tree.predict(&[100.0]), 1);
    }
}
