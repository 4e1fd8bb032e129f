//! CART binary decision tree: greedy Gini splits over feature/midpoint pairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{ImportanceVector, ModelParams, TrainedModel, MODEL_FORMAT_VERSION};
use crate::dataset::SampleSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Internal node: rows with `value <= threshold` on `feature` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Leaf holding the fraction of class-1 training samples that reached it.
    Leaf { class1_fraction: f64 },
}

/// Node-array tree; the root is index 0, children are stored preorder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut idx = 0usize;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { class1_fraction } => return *class1_fraction,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], idx: usize) -> usize {
            match &nodes[idx] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 12,
            min_samples_leaf: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub config: TreeConfig,
    pub tree: Tree,
}

/// Gini impurity from class counts: `1 - p0^2 - p1^2`.
pub(crate) fn gini_counts(n0: usize, n1: usize) -> f64 {
    let n = (n0 + n1) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p0 = n0 as f64 / n;
    let p1 = n1 as f64 / n;
    1.0 - p0 * p0 - p1 * p1
}

pub(crate) struct BestSplit {
    pub feature: usize,
    pub threshold: f64,
    /// `(nl/n)*gini(left) + (nr/n)*gini(right)` for this split.
    pub weighted_child_impurity: f64,
}

/// Greedy best split over the given features. Candidate thresholds are
/// midpoints between consecutive distinct sorted values; ties are broken by
/// lower feature index, then lower threshold (features must arrive ascending).
/// `None` when no split satisfies `min_samples_leaf` on both sides.
pub(crate) fn best_split(
    x: &[Vec<f64>],
    y: &[u8],
    indices: &[usize],
    features: &[usize],
    min_samples_leaf: usize,
) -> Option<BestSplit> {
    let n = indices.len();
    let total1: usize = indices.iter().filter(|&&i| y[i] == 1).count();
    let mut best: Option<BestSplit> = None;
    let mut vals: Vec<(f64, u8)> = Vec::with_capacity(n);
    for &feature in features {
        vals.clear();
        vals.extend(indices.iter().map(|&i| (x[i][feature], y[i])));
        vals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left1 = 0usize;
        for i in 1..n {
            left1 += vals[i - 1].1 as usize;
            if vals[i].0 == vals[i - 1].0 {
                continue;
            }
            if i < min_samples_leaf || n - i < min_samples_leaf {
                continue;
            }
            let w = weighted_child_impurity(i, left1, n, total1);
            if best.as_ref().is_none_or(|b| w < b.weighted_child_impurity) {
                best = Some(BestSplit {
                    feature,
                    threshold: split_threshold(vals[i - 1].0, vals[i].0),
                    weighted_child_impurity: w,
                });
            }
        }
    }
    best
}

pub(crate) fn weighted_child_impurity(nl: usize, l1: usize, n: usize, total1: usize) -> f64 {
    let l0 = nl - l1;
    let nr = n - nl;
    let r1 = total1 - l1;
    let r0 = nr - r1;
    (nl as f64 / n as f64) * gini_counts(l0, l1) + (nr as f64 / n as f64) * gini_counts(r0, r1)
}

/// Midpoint of two consecutive distinct values, nudged down to `a` if rounding
/// lands on `b`, so that `value <= threshold` reproduces the training partition.
fn split_threshold(a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    if mid < b {
        mid
    } else {
        a
    }
}

/// Grows a CART tree over row indices; the feature picker decides which
/// features each split may consider (all of them for a plain tree, a random
/// subset for forest members).
pub(crate) struct TreeGrower<'a, F: FnMut(&mut Vec<usize>)> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    max_depth: usize,
    min_samples_leaf: usize,
    pick_features: F,
    root_n: f64,
    nodes: Vec<Node>,
    /// Per-feature accumulated impurity decrease, weighted by node share.
    importance_raw: Vec<f64>,
    feature_scratch: Vec<usize>,
}

impl<'a, F: FnMut(&mut Vec<usize>)> TreeGrower<'a, F> {
    pub(crate) fn new(
        x: &'a [Vec<f64>],
        y: &'a [u8],
        n_features: usize,
        max_depth: usize,
        min_samples_leaf: usize,
        pick_features: F,
    ) -> Self {
        TreeGrower {
            x,
            y,
            max_depth,
            min_samples_leaf,
            pick_features,
            root_n: 0.0,
            nodes: Vec::new(),
            importance_raw: vec![0.0; n_features],
            feature_scratch: Vec::with_capacity(n_features),
        }
    }

    pub(crate) fn fit(mut self, indices: Vec<usize>) -> (Tree, Vec<f64>) {
        self.root_n = indices.len() as f64;
        self.grow(indices, 0);
        (Tree { nodes: self.nodes }, self.importance_raw)
    }

    fn grow(&mut self, indices: Vec<usize>, depth: usize) -> usize {
        let n = indices.len();
        let n1 = indices.iter().filter(|&&i| self.y[i] == 1).count();
        let n0 = n - n1;
        let leaf = Node::Leaf {
            class1_fraction: n1 as f64 / n as f64,
        };
        if n0 == 0 || n1 == 0 || depth >= self.max_depth || n < 2 * self.min_samples_leaf {
            self.nodes.push(leaf);
            return self.nodes.len() - 1;
        }
        (self.pick_features)(&mut self.feature_scratch);
        let scratch = std::mem::take(&mut self.feature_scratch);
        let found = best_split(self.x, self.y, &indices, &scratch, self.min_samples_leaf);
        self.feature_scratch = scratch;
        let Some(split) = found else {
            self.nodes.push(leaf);
            return self.nodes.len() - 1;
        };

        let parent_gini = gini_counts(n0, n1);
        self.importance_raw[split.feature] +=
            (n as f64 / self.root_n) * (parent_gini - split.weighted_child_impurity);

        let (mut left_idx, mut right_idx) = (Vec::new(), Vec::new());
        for i in indices {
            if self.x[i][split.feature] <= split.threshold {
                left_idx.push(i);
            } else {
                right_idx.push(i);
            }
        }

        let node_pos = self.nodes.len();
        self.nodes.push(leaf); // placeholder until children exist
        let left = self.grow(left_idx, depth + 1);
        let right = self.grow(right_idx, depth + 1);
        self.nodes[node_pos] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        node_pos
    }
}

pub(crate) fn require_both_classes(train: &SampleSet) -> Result<()> {
    let (n0, n1) = train.class_counts();
    if n0 == 0 || n1 == 0 {
        return Err(Error::Training(format!(
            "both classes required, got {n0} samples of class 0 and {n1} of class 1"
        )));
    }
    Ok(())
}

/// Fit a CART tree on the full sample with every feature available at each split.
pub fn train_tree(train: &SampleSet, cfg: &TreeConfig) -> Result<TrainedModel> {
    require_both_classes(train)?;
    let k = train.n_features();
    let grower = TreeGrower::new(
        &train.x,
        &train.y,
        k,
        cfg.max_depth,
        cfg.min_samples_leaf,
        |scratch: &mut Vec<usize>| {
            scratch.clear();
            scratch.extend(0..k);
        },
    );
    let (tree, raw) = grower.fit((0..train.len()).collect());
    Ok(TrainedModel {
        version: MODEL_FORMAT_VERSION,
        feature_names: train.feature_names.clone(),
        params: ModelParams::Tree(TreeModel {
            config: *cfg,
            tree,
        }),
        importance: ImportanceVector::from_raw(&train.feature_names, &raw),
    })
}
