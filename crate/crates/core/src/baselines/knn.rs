//! K-nearest-neighbour ensemble over random feature subspaces: each
//! subspace votes with a plain Euclidean KNN, and the final label is the
//! plurality across subspaces (ties to the smallest label).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
    pub n_subspaces: usize,
    pub subspace_dim: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig { k: 5, n_subspaces: 10, subspace_dim: 9 }
    }
}

/// Lazy learner: stores the training set plus the sampled subspaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RslKnnModel {
    pub config: KnnConfig,
    pub n_classes: usize,
    pub n_features: usize,
    /// Sorted feature indices, one set per subspace.
    subspaces: Vec<Vec<usize>>,
    train_features: Vec<FeatureVector>,
    train_labels: Vec<usize>,
}

/// Orders by distance, then by training index, so equal distances
/// resolve to the earliest sample.
#[derive(PartialEq)]
struct Neighbor {
    distance: f64,
    index: usize,
}

impl Eq for Neighbor {}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .partial_cmp(&other.distance)
            .expect("finite distances")
            .then(self.index.cmp(&other.index))
    }
}

fn plurality(counts: &[usize]) -> usize {
    let mut best = 0usize;
    for (label, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = label;
        }
    }
    best
}

fn squared_distance(a: &[f64], b: &[f64], dims: &[usize]) -> f64 {
    dims.iter()
        .map(|&j| {
            let d = a[j] - b[j];
            d * d
        })
        .sum()
}

/// Builds the ensemble: validates the shapes, then draws
/// `n_subspaces` sorted index sets of size `subspace_dim` from the
/// seeded generator.
pub fn knn_fit(
    features: &[FeatureVector],
    labels: &[usize],
    n_classes: usize,
    config: KnnConfig,
    seed: u64,
) -> Result<RslKnnModel> {
    if features.is_empty() {
        return Err(Error::data("cannot fit a neighbour model on no samples"));
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
    if config.k == 0 {
        return Err(Error::data("k must be at least 1"));
    }
    if config.k > features.len() {
        return Err(Error::data(format!(
            "k = {} exceeds the {} training samples",
            config.k,
            features.len()
        )));
    }
    if config.n_subspaces == 0 {
        return Err(Error::data("need at least one subspace"));
    }
    if config.subspace_dim == 0 || config.subspace_dim > n_features {
        return Err(Error::data(format!(
            "subspace dimension {} must be in 1..={n_features}",
            config.subspace_dim
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let subspaces: Vec<Vec<usize>> = (0..config.n_subspaces)
        .map(|_| {
            let mut dims: Vec<usize> =
                rand::seq::index::sample(&mut rng, n_features, config.subspace_dim).into_vec();
            dims.sort_unstable();
            dims
        })
        .collect();

    Ok(RslKnnModel {
        config,
        n_classes,
        n_features,
        subspaces,
        train_features: features.to_vec(),
        train_labels: labels.to_vec(),
    })
}

impl RslKnnModel {
    pub fn subspaces(&self) -> &[Vec<usize>] {
        &self.subspaces
    }

    /// Label voted by one subspace: the k nearest training samples under
    /// Euclidean distance restricted to `dims`, majority with ties to the
    /// smallest label.
    fn subspace_vote(&self, query: &[f64], dims: &[usize]) -> usize {
        let mut heap: BinaryHeap<Neighbor> = BinaryHeap::with_capacity(self.config.k + 1);
        for (index, sample) in self.train_features.iter().enumerate() {
            let distance = squared_distance(query, &sample.0, dims);
            heap.push(Neighbor { distance, index });
            if heap.len() > self.config.k {
                heap.pop();
            }
        }
        let mut counts = vec![0usize; self.n_classes];
        for n in heap {
            counts[self.train_labels[n.index]] += 1;
        }
        plurality(&counts)
    }

    pub fn predict(&self, v: &FeatureVector) -> Result<usize> {
        if v.len() != self.n_features {
            return Err(Error::Shape(format!(
                "input has {} features, model expects {}",
                v.len(),
                self.n_features
            )));
        }
        let mut counts = vec![0usize; self.n_classes];
        for dims in &self.subspaces {
            counts[self.subspace_vote(&v.0, dims)] += 1;
        }
        Ok(plurality(&counts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(values: &[f64]) -> FeatureVector {
        FeatureVector(values.to_vec())
    }

    fn full_config(d: usize, k: usize) -> KnnConfig {
        KnnConfig { k, n_subspaces: 1, subspace_dim: d }
    }

    #[test]
    fn k1_single_subspace_is_nearest_neighbour() {
        let features = vec![fv(&[0.0, 0.0]), fv(&[1.0, 1.0]), fv(&[0.0, 1.0])];
        let labels = vec![0, 1, 2];
        let model = knn_fit(&features, &labels, 3, full_config(2, 1), 7).unwrap();
        assert_eq!(model.predict(&fv(&[0.1, 0.1])).unwrap(), 0);
        assert_eq!(model.predict(&fv(&[0.9, 0.8])).unwrap(), 1);
        assert_eq!(model.predict(&fv(&[0.1, 0.9])).unwrap(), 2);
    }

    #[test]
    fn training_point_query_returns_its_own_label() {
        let features: Vec<FeatureVector> =
            (0..10).map(|i| fv(&[i as f64, (i * i) as f64 * 0.1])).collect();
        let labels: Vec<usize> = (0..10).map(|i| (i % 4) as usize).collect();
        let model = knn_fit(&features, &labels, 4, full_config(2, 1), 3).unwrap();
        for (f, l) in features.iter().zip(&labels) {
            assert_eq!(model.predict(f).unwrap(), *l);
        }
    }

    #[test]
    fn matches_brute_force_knn_on_full_space() {
        // One subspace spanning every feature must behave exactly like a
        // plain KNN; compare against an independent O(n log n) oracle.
        let features: Vec<FeatureVector> = (0..25)
            .map(|i| fv(&[(i as f64 * 0.37).sin(), (i as f64 * 0.61).cos(), i as f64 * 0.04]))
            .collect();
        let labels: Vec<usize> = (0..25).map(|i| (i * 3 % 4) as usize).collect();
        let k = 5;
        let model = knn_fit(&features, &labels, 4, full_config(3, k), 11).unwrap();

        let queries: Vec<FeatureVector> = (0..12)
            .map(|q| fv(&[(q as f64 * 0.91).fract(), (q as f64 * 0.53).fract(), q as f64 * 0.08]))
            .collect();
        for q in &queries {
            let mut scored: Vec<(f64, usize)> = features
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    let d: f64 =
                        f.0.iter().zip(&q.0).map(|(a, b)| (a - b) * (a - b)).sum();
                    (d, i)
                })
                .collect();
            scored.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut counts = [0usize; 4];
            for (_, i) in scored.iter().take(k) {
                counts[labels[*i]] += 1;
            }
            let expected = counts
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                .unwrap()
                .0;
            assert_eq!(model.predict(q).unwrap(), expected);
        }
    }

    #[test]
    fn equal_votes_resolve_to_smallest_label() {
        // k = 2 with one neighbour of each label: counts tie 1-1,
        // so the prediction must be the smaller label.
        let features = vec![fv(&[0.4]), fv(&[0.6])];
        let labels = vec![3, 1];
        let model = knn_fit(&features, &labels, 4, full_config(1, 2), 5).unwrap();
        assert_eq!(model.predict(&fv(&[0.5])).unwrap(), 1);
    }

    #[test]
    fn subspaces_are_seed_deterministic_and_sized() {
        let features: Vec<FeatureVector> = (0..20).map(|i| fv(&vec![i as f64; 18])).collect();
        let labels = vec![0usize; 20];
        let config = KnnConfig::default();
        let a = knn_fit(&features, &labels, 2, config.clone(), 42).unwrap();
        let b = knn_fit(&features, &labels, 2, config.clone(), 42).unwrap();
        let c = knn_fit(&features, &labels, 2, config, 43).unwrap();
        assert_eq!(a.subspaces(), b.subspaces());
        assert_ne!(a.subspaces(), c.subspaces());
        assert_eq!(a.subspaces().len(), 10);
        for dims in a.subspaces() {
            assert_eq!(dims.len(), 9);
            assert!(dims.windows(2).all(|w| w[0] < w[1]), "sorted, distinct indices");
            assert!(dims.iter().all(|&j| j < 18));
        }
    }

    #[test]
    fn oversized_k_rejected() {
        let features = vec![fv(&[0.0]), fv(&[1.0])];
        let labels = vec![0, 1];
        let err = knn_fit(&features, &labels, 2, full_config(1, 3), 0).unwrap_err();
        assert!(err.to_string().contains("exceeds"));
    }

    #[test]
    fn oversized_subspace_rejected() {
        let features = vec![fv(&[0.0, 0.0]), fv(&[1.0, 1.0])];
        let labels = vec![0, 1];
        let config = KnnConfig { k: 1, n_subspaces: 2, subspace_dim: 3 };
        assert!(knn_fit(&features, &labels, 2, config, 0).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let features: Vec<FeatureVector> = (0..6).map(|i| fv(&[i as f64, 1.0])).collect();
        let labels = vec![0, 1, 0, 1, 0, 1];
        let config = KnnConfig { k: 3, n_subspaces: 2, subspace_dim: 1 };
        let model = knn_fit(&features, &labels, 2, config, 9).unwrap();
        let json = serde_json::to_string(&model).unwrap();
        let back: RslKnnModel = serde_json::from_str(&json).unwrap();
        assert_eq!(model, back);
    }
}
