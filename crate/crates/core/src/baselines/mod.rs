//! Reference classifiers the convolutional detector is compared against:
//! a Gini decision tree and a random-subspace KNN ensemble.

mod knn;
mod tree;

pub use knn::{knn_fit, KnnConfig, RslKnnModel};
pub use tree::{dt_fit, DecisionTree, DtConfig, TreeNode};
