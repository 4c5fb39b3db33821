//! CART-style decision tree: greedy Gini-impurity splits at midpoints
//! between consecutive distinct feature values, with deterministic
//! tie-breaking (lowest feature index, then lowest threshold).

use serde::{Deserialize, Serialize};

use crate::dataset::FeatureVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtConfig {
    /// None grows the tree until nodes are pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for DtConfig {
    fn default() -> Self {
        DtConfig { max_depth: Some(12), min_samples_split: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        /// Training-class counts at this leaf.
        counts: Vec<usize>,
        /// Argmax of counts; ties go to the smallest label.
        prediction: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        /// Samples with value ≤ threshold.
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub config: DtConfig,
    pub n_classes: usize,
    pub n_features: usize,
    root: TreeNode,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            p * p
        })
        .sum::<f64>()
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0usize;
    for (label, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = label;
        }
    }
    best
}

struct Builder<'a> {
    features: &'a [FeatureVector],
    labels: &'a [usize],
    n_classes: usize,
    config: &'a DtConfig,
}

impl Builder<'_> {
    fn class_counts(&self, indices: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &i in indices {
            counts[self.labels[i]] += 1;
        }
        counts
    }

    fn build(&self, indices: &mut Vec<usize>, depth: usize) -> TreeNode {
        let counts = self.class_counts(indices);
        let n = indices.len();
        let parent_gini = gini(&counts, n);
        let depth_ok = self.config.max_depth.map_or(true, |d| depth < d);
        let splittable =
            depth_ok && n >= self.config.min_samples_split && parent_gini > 0.0;

        let best = if splittable { self.best_split(indices, &counts) } else { None };
        let Some((feature, threshold)) = best else {
            return TreeNode::Leaf { prediction: majority(&counts), counts };
        };

        let (mut left_idx, mut right_idx): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| self.features[i].0[feature] <= threshold);
        TreeNode::Split {
            feature,
            threshold,
            left: Box::new(self.build(&mut left_idx, depth + 1)),
            right: Box::new(self.build(&mut right_idx, depth + 1)),
        }
    }

    /// Scans every (feature, midpoint) candidate; keeps the first strict
    /// improvement, so ties resolve to the lowest feature then threshold.
    fn best_split(&self, indices: &[usize], parent_counts: &[usize]) -> Option<(usize, f64)> {
        let n = indices.len();
        let n_features = self.features[indices[0]].len();
        let parent_score = gini(parent_counts, n) * n as f64;
        let mut best: Option<(f64, usize, f64)> = None; // (weighted child score, feature, threshold)

        let mut order: Vec<usize> = Vec::with_capacity(n);
        for feature in 0..n_features {
            order.clear();
            order.extend_from_slice(indices);
            order.sort_by(|&a, &b| {
                self.features[a].0[feature]
                    .partial_cmp(&self.features[b].0[feature])
                    .expect("finite features")
            });
            let mut left_counts = vec![0usize; self.n_classes];
            let mut right_counts = parent_counts.to_vec();
            for pos in 0..n - 1 {
                let i = order[pos];
                left_counts[self.labels[i]] += 1;
                right_counts[self.labels[i]] -= 1;
                let a = self.features[i].0[feature];
                let b = self.features[order[pos + 1]].0[feature];
                if a == b {
                    continue;
                }
                let threshold = (a + b) / 2.0;
                let n_left = pos + 1;
                let n_right = n - n_left;
                let score = gini(&left_counts, n_left) * n_left as f64
                    + gini(&right_counts, n_right) * n_right as f64;
                if score < parent_score && best.as_ref().is_none_or(|(s, _, _)| score < *s) {
                    best = Some((score, feature, threshold));
                }
            }
        }
        best.map(|(_, feature, threshold)| (feature, threshold))
    }
}

/// Fits a tree on normalized feature vectors and integer labels in
/// 0..n_classes.
pub fn dt_fit(
    features: &[FeatureVector],
    labels: &[usize],
    n_classes: usize,
    config: DtConfig,
) -> Result<DecisionTree> {
    if features.is_empty() {
        return Err(Error::data("cannot fit a decision tree on no samples"));
    }
    if features.len() != labels.len() {
        return Err(Error::data(format!(
            "{} feature vectors but {} labels",
            features.len(),
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::data(format!("label {bad} outside 0..{n_classes}")));
    }
    let n_features = features[0].len();
    if features.iter().any(|f| f.len() != n_features) {
        return Err(Error::Shape("inconsistent feature widths".into()));
    }
    if config.min_samples_split < 2 {
        return Err(Error::data("min_samples_split must be at least 2"));
    }
    let builder = Builder { features, labels, n_classes, config: &config };
    let mut indices: Vec<usize> = (0..features.len()).collect();
    let root = builder.build(&mut indices, 0);
    Ok(DecisionTree { config, n_classes, n_features, root })
}

impl DecisionTree {
    pub fn predict(&self, v: &FeatureVector) -> Result<usize> {
        if v.len() != self.n_features {
            return Err(Error::Shape(format!(
                "input has {} features, tree expects {}",
                v.len(),
                self.n_features
            )));
        }
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { prediction, .. } => return Ok(*prediction),
                TreeNode::Split { feature, threshold, left, right } => {
                    node = if v.0[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(node: &TreeNode) -> usize {
            match node {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(left).max(walk(right)),
            }
        }
        walk(&self.root)
    }
}
