use serde::{Deserialize, Serialize};

use super::LearnerError;
use crate::activity::Label;

// candidates within this margin of the incumbent count as ties
const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_impurity_decrease: f64,
    /// Echoed into run manifests; induction itself draws no random numbers.
    pub seed: u64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: 8,
            min_samples_split: 4,
            min_impurity_decrease: 1e-7,
            seed: 0,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<(), LearnerError> {
        if self.max_depth < 1 {
            return Err(LearnerError::InvalidConfig("max_depth must be >= 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(LearnerError::InvalidConfig("min_samples_split must be >= 2".into()));
        }
        if !(self.min_impurity_decrease >= 0.0) {
            return Err(LearnerError::InvalidConfig(
                "min_impurity_decrease must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Gini impurity `1 - Σ p²` of a class histogram.
pub fn gini(counts: &[usize]) -> Result<f64, LearnerError> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(LearnerError::EmptyNode);
    }
    let n = total as f64;
    Ok(1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>())
}

fn gini2(c: [usize; 2]) -> f64 {
    gini(&c).unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        label: Label,
        counts: [usize; 2],
    },
    /// Rows with `row[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn leaves(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }

    fn count_splits(&self, out: &mut [usize]) {
        if let Node::Split {
            feature,
            left,
            right,
            ..
        } = self
        {
            out[*feature] += 1;
            left.count_splits(out);
            right.count_splits(out);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    root: Node,
    n_features: usize,
}

fn majority(c: [usize; 2]) -> Label {
    if c[1] > c[0] {
        Label::Lowering
    } else {
        Label::NotLowering
    }
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

struct Builder<'a, R> {
    rows: &'a [R],
    labels: &'a [Label],
    cfg: &'a TreeConfig,
    n_features: usize,
}

impl<R: AsRef<[f64]>> Builder<'_, R> {
    fn counts(&self, idx: &[usize]) -> [usize; 2] {
        let mut c = [0; 2];
        for &i in idx {
            c[self.labels[i].index()] += 1;
        }
        c
    }

    fn best_split(&self, idx: &[usize], total: [usize; 2]) -> Option<BestSplit> {
        let n = idx.len() as f64;
        let mut best: Option<BestSplit> = None;
        let mut order = idx.to_vec();
        for f in 0..self.n_features {
            let value = |i: usize| self.rows[i].as_ref()[f];
            order.sort_by(|&a, &b| value(a).total_cmp(&value(b)));
            let mut left = [0usize; 2];
            for k in 0..order.len() - 1 {
                left[self.labels[order[k]].index()] += 1;
                let (lo, hi) = (value(order[k]), value(order[k + 1]));
                if lo == hi {
                    continue;
                }
                let right = [total[0] - left[0], total[1] - left[1]];
                let nl = (k + 1) as f64;
                let w = (nl * gini2(left) + (n - nl) * gini2(right)) / n;
                if best.as_ref().is_none_or(|b| w < b.impurity - TIE_EPS) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        impurity: w,
                    });
                }
            }
        }
        best
    }

    fn grow(&self, idx: Vec<usize>, depth: usize) -> Node {
        let counts = self.counts(&idx);
        let leaf = Node::Leaf {
            label: majority(counts),
            counts,
        };
        let parent = gini2(counts);
        if depth >= self.cfg.max_depth || idx.len() < self.cfg.min_samples_split || parent == 0.0 {
            return leaf;
        }
        let Some(split) = self.best_split(&idx, counts) else {
            return leaf;
        };
        if parent - split.impurity < self.cfg.min_impurity_decrease {
            return leaf;
        }
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| self.rows[i].as_ref()[split.feature] <= split.threshold);
        Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(self.grow(l, depth + 1)),
            right: Box::new(self.grow(r, depth + 1)),
        }
    }
}

impl DecisionTree {
    /// Greedy Gini induction. Splits are tried at midpoints between
    /// consecutive distinct values; ties go to the lowest feature index, then
    /// the lowest threshold. Leaves vote by majority, ties to not-lowering.
    pub fn fit<R: AsRef<[f64]>>(
        rows: &[R],
        labels: &[Label],
        cfg: &TreeConfig,
    ) -> Result<Self, LearnerError> {
        cfg.validate()?;
        if rows.is_empty() {
            return Err(LearnerError::NoSamples);
        }
        if rows.len() != labels.len() {
            return Err(LearnerError::LabelCount {
                rows: rows.len(),
                labels: labels.len(),
            });
        }
        let n_features = rows[0].as_ref().len();
        if let Some(bad) = rows.iter().find(|r| r.as_ref().len() != n_features) {
            return Err(LearnerError::DimensionMismatch {
                expected: n_features,
                got: bad.as_ref().len(),
            });
        }
        let builder = Builder {
            rows,
            labels,
            cfg,
            n_features,
        };
        Ok(Self {
            root: builder.grow((0..rows.len()).collect(), 0),
            n_features,
        })
    }

    pub fn predict(&self, row: &[f64]) -> Result<Label, LearnerError> {
        if row.len() != self.n_features {
            return Err(LearnerError::DimensionMismatch {
                expected: self.n_features,
                got: row.len(),
            });
        }
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { label, .. } => return Ok(*label),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn n_leaves(&self) -> usize {
        self.root.leaves()
    }

    /// How many internal nodes test each feature.
    pub fn split_counts(&self) -> Vec<usize> {
        let mut out = vec![0; self.n_features];
        self.root.count_splits(&mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Lowering as B, NotLowering as A};

    #[test]
    fn gini_examples() {
        assert_eq!(gini(&[5, 5]).unwrap(), 0.5);
        assert_eq!(gini(&[10, 0]).unwrap(), 0.0);
        assert_eq!(gini(&[3, 1]).unwrap(), 0.375);
        assert!(matches!(gini(&[0, 0]), Err(LearnerError::EmptyNode)));
    }

    #[test]
    fn separable_one_dimensional() {
        let x = [[0.0], [1.0], [10.0], [11.0]];
        let y = [A, A, B, B];
        let t = DecisionTree::fit(&x, &y, &TreeConfig::default()).unwrap();
        assert_eq!(t.depth(), 1);
        match t.root() {
            Node::Split { feature, threshold, .. } => assert_eq!((*feature, *threshold), (0, 5.5)),
            other => panic!("expected split, got {other:?}"),
        }
        for (r, l) in x.iter().zip(y) {
            assert_eq!(t.predict(r).unwrap(), l);
        }
        assert_eq!(t.predict(&[5.5]).unwrap(), A);
        assert_eq!(t.predict(&[5.5000001]).unwrap(), B);
    }

    #[test]
    fn pure_labels_give_single_leaf() {
        let x = [[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]];
        let t = DecisionTree::fit(&x, &[B, B, B], &TreeConfig::default()).unwrap();
        assert_eq!(t.n_leaves(), 1);
        assert_eq!(t.predict(&[100.0, -3.0]).unwrap(), B);
    }

    #[test]
    fn conflicting_duplicates_terminate() {
        let x = [[1.0], [1.0], [1.0], [1.0]];
        let t = DecisionTree::fit(&x, &[A, B, A, B], &TreeConfig::default()).unwrap();
        assert_eq!(t.n_leaves(), 1);
        assert_eq!(t.predict(&[1.0]).unwrap(), A);
        let t = DecisionTree::fit(&x, &[B, B, A, B], &TreeConfig::default()).unwrap();
        assert_eq!(t.predict(&[1.0]).unwrap(), B);
    }

    #[test]
    fn tie_break_prefers_lowest_feature() {
        // both features separate the data perfectly
        let x = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]];
        let t = DecisionTree::fit(&x, &[A, A, B, B], &TreeConfig::default()).unwrap();
        match t.root() {
            Node::Split { feature, .. } => assert_eq!(*feature, 0),
            _ => panic!(),
        }
        assert_eq!(t.split_counts(), vec![1, 0]);
    }

    #[test]
    fn dimension_errors() {
        let x = [[0.0], [1.0]];
        assert!(matches!(
            DecisionTree::fit(&x, &[A], &TreeConfig::default()),
            Err(LearnerError::LabelCount { .. })
        ));
        let ragged = vec![vec![0.0], vec![1.0, 2.0]];
        assert!(matches!(
            DecisionTree::fit(&ragged, &[A, B], &TreeConfig::default()),
            Err(LearnerError::DimensionMismatch { expected: 1, got: 2 })
        ));
        let empty: Vec<[f64; 1]> = vec![];
        assert!(matches!(
            DecisionTree::fit(&empty, &[], &TreeConfig::default()),
            Err(LearnerError::NoSamples)
        ));
        let t = DecisionTree::fit(&x, &[A, B], &TreeConfig::default()).unwrap();
        assert!(matches!(
            t.predict(&[1.0, 2.0]),
            Err(LearnerError::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn config_validation() {
        let mut c = TreeConfig::default();
        c.max_depth = 0;
        assert!(c.validate().is_err());
        let mut c = TreeConfig::default();
        c.min_samples_split = 1;
        assert!(c.validate().is_err());
    }

    #[test]
    fn depth_cap_respected() {
        // alternating labels need many splits
        let x: Vec<[f64; 1]> = (0..64).map(|i| [i as f64]).collect();
        let y: Vec<Label> = (0..64).map(|i| if i % 2 == 0 { A } else { B }).collect();
        let cfg = TreeConfig {
            max_depth: 3,
            min_samples_split: 2,
            ..Default::default()
        };
        let t = DecisionTree::fit(&x, &y, &cfg).unwrap();
        assert!(t.depth() <= 3);
    }
}
