use serde::{Deserialize, Serialize};

use crate::classify::N_CLASSES;

/// Gini impurity of a class-count vector.
pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { counts: [usize; N_CLASSES] },
}

/// CART classifier stored as a node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

struct Split {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl DecisionTree {
    pub fn fit(x: &[Vec<f64>], y: &[usize], max_depth: usize, min_leaf: usize) -> Self {
        let mut tree = DecisionTree { nodes: Vec::new() };
        let idx: Vec<usize> = (0..y.len()).collect();
        tree.grow(x, y, idx, 0, max_depth, min_leaf.max(1));
        tree
    }

    fn grow(&mut self, x: &[Vec<f64>], y: &[usize], idx: Vec<usize>, depth: usize, max_depth: usize, min_leaf: usize) -> usize {
        let counts = class_counts(y, &idx);
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { counts });

        let parent = gini(&counts);
        if depth >= max_depth || parent == 0.0 || idx.len() < 2 * min_leaf {
            return id;
        }
        let Some(split) = best_split(x, y, &idx, min_leaf) else {
            return id;
        };
        if split.score >= parent - 1e-12 {
            return id;
        }
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| x[i][split.feature] <= split.threshold);
        let left = self.grow(x, y, l, depth + 1, max_depth, min_leaf);
        let right = self.grow(x, y, r, depth + 1, max_depth, min_leaf);
        self.nodes[id] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }

    pub fn leaf_counts(&self, x: &[f64]) -> [usize; N_CLASSES] {
        let mut node = 0;
        loop {
            match &self.nodes[node] {
                TreeNode::Leaf { counts } => return *counts,
                TreeNode::Split { feature, threshold, left, right } => {
                    node = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn scores(&self, x: &[f64]) -> [f64; N_CLASSES] {
        let counts = self.leaf_counts(x);
        let n: usize = counts.iter().sum();
        let mut s = [0.0; N_CLASSES];
        for (s, c) in s.iter_mut().zip(counts) {
            *s = c as f64 / n as f64;
        }
        s
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Structural check for deserialized trees: children in range and
    /// pointing forward, every leaf non-empty.
    pub fn is_well_formed(&self) -> bool {
        !self.nodes.is_empty()
            && self.nodes.iter().enumerate().all(|(i, n)| match n {
                TreeNode::Leaf { counts } => counts.iter().sum::<usize>() > 0,
                TreeNode::Split { left, right, threshold, .. } => {
                    *left > i && *right > i && *left < self.nodes.len() && *right < self.nodes.len() && threshold.is_finite()
                }
            })
    }
}

fn class_counts(y: &[usize], idx: &[usize]) -> [usize; N_CLASSES] {
    let mut c = [0; N_CLASSES];
    for &i in idx {
        c[y[i]] += 1;
    }
    c
}

/// Exhaustive search over features and midpoints between distinct values.
/// Features are scanned in index order and thresholds in ascending order;
/// only a strictly better score replaces the incumbent.
fn best_split(x: &[Vec<f64>], y: &[usize], idx: &[usize], min_leaf: usize) -> Option<Split> {
    let n = idx.len();
    let total = class_counts(y, idx);
    let n_features = x[idx[0]].len();
    let mut best: Option<Split> = None;

    let mut order = idx.to_vec();
    for f in 0..n_features {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
        let mut left = [0usize; N_CLASSES];
        for k in 0..n - 1 {
            left[y[order[k]]] += 1;
            let (lo, hi) = (x[order[k]][f], x[order[k + 1]][f]);
            let n_left = k + 1;
            if lo == hi || n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            let mut right = total;
            for c in 0..N_CLASSES {
                right[c] -= left[c];
            }
            let score = (n_left as f64 * gini(&left) + (n - n_left) as f64 * gini(&right)) / n as f64;
            if best.as_ref().is_none_or(|b| score < b.score) {
                let mid = lo + (hi - lo) / 2.0;
                // adjacent floats: the midpoint may round up onto `hi`
                let threshold = if mid < hi { mid } else { lo };
                best = Some(Split {
                    feature: f,
                    threshold,
                    score,
                });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[5, 0, 0, 0]), 0.0);
        assert_eq!(gini(&[0, 0, 0, 0]), 0.0);
        assert!((gini(&[2, 2, 0, 0]) - 0.5).abs() < 1e-15);
        assert!((gini(&[1, 1, 1, 1]) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn single_class_is_one_leaf() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let t = DecisionTree::fit(&x, &[2; 10], 6, 2);
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.scores(&[3.0]), [0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn threshold_split_on_one_feature() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![0.0, i as f64]).collect();
        let y: Vec<usize> = (0..20).map(|i| usize::from(i >= 12)).collect();
        let t = DecisionTree::fit(&x, &y, 6, 2);
        assert_eq!(t.depth(), 1);
        match &t.nodes[0] {
            TreeNode::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 1);
                assert_eq!(*threshold, 11.5);
            }
            other => panic!("{other:?}"),
        }
        assert!(t.is_well_formed());
    }

    #[test]
    fn tie_goes_to_lowest_feature() {
        // both features separate the classes identically
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, i as f64 * 10.0]).collect();
        let y: Vec<usize> = (0..8).map(|i| usize::from(i >= 4)).collect();
        let t = DecisionTree::fit(&x, &y, 3, 1);
        assert!(matches!(t.nodes[0], TreeNode::Split { feature: 0, .. }));
    }

    #[test]
    fn depth_and_leaf_limits() {
        let x: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64]).collect();
        let y: Vec<usize> = (0..64).map(|i| i % 2).collect();
        assert!(DecisionTree::fit(&x, &y, 3, 1).depth() <= 3);
        let t = DecisionTree::fit(&x, &y, 20, 4);
        for n in &t.nodes {
            if let TreeNode::Leaf { counts } = n {
                assert!(counts.iter().sum::<usize>() >= 4);
            }
        }
    }
}
