use crate::ensemble::Label;

use super::{majority, Dataset};

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        label: Label,
        samples: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// CART classifier: Gini impurity, exhaustive best split, features scanned
/// in column order.
#[derive(Debug, Clone)]
pub struct DecisionTreeModel {
    nodes: Vec<TreeNode>,
}

struct Builder<'a> {
    data: &'a Dataset,
    n_classes: usize,
    max_depth: usize,
    min_split: usize,
    min_leaf: usize,
    nodes: Vec<TreeNode>,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &i in idx {
            c[self.data.labels()[i] as usize] += 1;
        }
        c
    }

    fn leaf(&mut self, idx: &[usize]) -> usize {
        let labels: Vec<Label> = idx.iter().map(|&i| self.data.labels()[i]).collect();
        self.nodes.push(TreeNode::Leaf {
            label: majority(&labels, self.n_classes),
            samples: idx.len(),
        });
        self.nodes.len() - 1
    }

    /// Best `(feature, threshold, weighted impurity)` honouring the leaf size.
    fn best_split(&self, idx: &[usize]) -> Option<(usize, f64, f64)> {
        let n = idx.len();
        let feats = self.data.features();
        let labels = self.data.labels();
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order = idx.to_vec();
        for f in 0..self.data.p() {
            order.sort_by(|&a, &b| feats[a][f].total_cmp(&feats[b][f]).then(a.cmp(&b)));
            let mut left = vec![0usize; self.n_classes];
            let mut right = self.counts(idx);
            for pos in 0..n - 1 {
                let l = labels[order[pos]] as usize;
                left[l] += 1;
                right[l] -= 1;
                let n_left = pos + 1;
                let n_right = n - n_left;
                let (a, b) = (feats[order[pos]][f], feats[order[pos + 1]][f]);
                if a == b || n_left < self.min_leaf || n_right < self.min_leaf {
                    continue;
                }
                let score = (n_left as f64 * gini(&left, n_left)
                    + n_right as f64 * gini(&right, n_right))
                    / n as f64;
                if best.is_none_or(|(_, _, s)| score < s) {
                    best = Some((f, a + (b - a) / 2.0, score));
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&idx);
        let impurity = gini(&counts, idx.len());
        if depth >= self.max_depth || idx.len() < self.min_split || impurity == 0.0 {
            return self.leaf(&idx);
        }
        let Some((feature, threshold, score)) = self.best_split(&idx) else {
            return self.leaf(&idx);
        };
        if score >= impurity - 1e-12 {
            return self.leaf(&idx);
        }
        let feats = self.data.features();
        let (l, r): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| feats[i][feature] <= threshold);
        let slot = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            label: 0,
            samples: 0,
        });
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[slot] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        slot
    }
}

impl DecisionTreeModel {
    pub fn fit(
        data: &Dataset,
        max_depth: usize,
        min_samples_split: usize,
        min_samples_leaf: usize,
    ) -> Self {
        let mut b = Builder {
            data,
            n_classes: data.n_classes(),
            max_depth,
            min_split: min_samples_split.max(2),
            min_leaf: min_samples_leaf.max(1),
            nodes: Vec::new(),
        };
        b.grow((0..data.n()).collect(), 0);
        Self { nodes: b.nodes }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    /// Number of splits on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, left).max(walk(nodes, right))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_sizes(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Leaf { samples, .. } => Some(*samples),
                _ => None,
            })
            .collect()
    }

    pub fn predict_row(&self, row: &[f64]) -> Label {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { label, .. } => return label,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[feature] <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::test_data::{dataset, from_rows, xor};
    use proptest::prelude::*;

    fn error(m: &DecisionTreeModel, data: &Dataset) -> f64 {
        let wrong = data
            .features()
            .iter()
            .zip(data.labels())
            .filter(|(x, &y)| m.predict_row(x) != y)
            .count();
        wrong as f64 / data.n() as f64
    }

    #[test]
    fn stump_cannot_solve_xor() {
        let data = xor();
        let m = DecisionTreeModel::fit(&data, 1, 2, 2);
        assert_eq!(error(&m, &data), 0.5);
    }

    #[test]
    fn gainless_root_stays_a_leaf() {
        // A first split has no Gini gain on XOR, so growth stops at the root.
        let data = xor();
        let m = DecisionTreeModel::fit(&data, 5, 2, 1);
        assert_eq!(error(&m, &data), 0.5);
        let shifted = dataset(
            &[
                (&[0.0, 0.0], 0),
                (&[1.0, 1.0], 0),
                (&[0.0, 1.0], 1),
                (&[1.0, 0.0], 1),
                (&[0.1, 0.1], 0),
            ],
            2,
        );
        let m = DecisionTreeModel::fit(&shifted, 5, 2, 1);
        assert_eq!(error(&m, &shifted), 0.0);
    }

    #[test]
    fn separable_threshold() {
        let data = dataset(&[(&[1.0], 0), (&[2.0], 0), (&[3.0], 1), (&[4.0], 1)], 2);
        let m = DecisionTreeModel::fit(&data, 3, 2, 1);
        assert_eq!(m.depth(), 1);
        assert_eq!(m.predict_row(&[2.4]), 0);
        assert_eq!(m.predict_row(&[2.6]), 1);
    }

    proptest! {
        #[test]
        fn structural_constraints_hold(
            rows in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0u32..3), 10..80),
            max_depth in 1usize..6,
            min_leaf in 1usize..10,
        ) {
            let data = from_rows(
                rows.iter().map(|(a, b, _)| vec![*a, *b]).collect(),
                rows.iter().map(|r| r.2).collect(),
                3,
            );
            let m = DecisionTreeModel::fit(&data, max_depth, 2, min_leaf);
            prop_assert!(m.depth() <= max_depth);
            if m.nodes().len() > 1 {
                prop_assert!(m.leaf_sizes().iter().all(|&s| s >= min_leaf));
            }
            prop_assert_eq!(m.leaf_sizes().iter().sum::<usize>(), data.n());
        }
    }
}
