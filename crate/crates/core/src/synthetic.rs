//! Seeded generation of clustered workloads: groups of near-duplicate
//! keys around random unit centers, with queries biased toward chosen
//! clusters. This is the planted structure the redundancy claims are
//! tested against.
//!
//! Generation draws one SplitMix64 stream in a fixed section order
//! (centers, keys, values, then each query); the gaussian pair cache is
//! cleared at every section boundary so each section starts at a raw
//! stream position. The exact order is documented in docs/rng.md and
//! must not change: seeds are part of the test contract.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::tensor::{LayerCache, Matrix, TokenIndex};

/// Parameters of a clustered workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpec {
    pub seed: u64,
    pub clusters: usize,
    pub per_cluster: usize,
    pub dim: usize,
    /// Per-coordinate gaussian noise added to a member's center.
    pub sigma: f64,
    pub query_count: usize,
    /// Relative weight of each cluster when sampling query targets.
    /// Empty means uniform; otherwise one non-negative weight per
    /// cluster with a positive sum.
    #[serde(default)]
    pub query_focus: Vec<f64>,
}

impl ClusterSpec {
    fn validate(&self) -> Result<()> {
        if self.clusters == 0 || self.per_cluster == 0 {
            return Err(Error::invalid_argument(
                "need at least one cluster and one member per cluster",
            ));
        }
        if self.dim < 2 {
            return Err(Error::invalid_argument("dimension must be at least 2"));
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::invalid_argument(format!(
                "noise level must be finite and non-negative, got {}",
                self.sigma
            )));
        }
        if !self.query_focus.is_empty() {
            if self.query_focus.len() != self.clusters {
                return Err(Error::invalid_argument(format!(
                    "query focus lists {} weights for {} clusters",
                    self.query_focus.len(),
                    self.clusters
                )));
            }
            let mut sum = 0.0;
            for &w in &self.query_focus {
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::invalid_argument(format!(
                        "query focus weights must be finite and non-negative, got {w}"
                    )));
                }
                sum += w;
            }
            if sum <= 0.0 {
                return Err(Error::invalid_argument(
                    "query focus weights must not all be zero",
                ));
            }
        }
        Ok(())
    }

    /// Total token count c * r.
    #[must_use]
    pub fn token_count(&self) -> usize {
        self.clusters * self.per_cluster
    }
}

/// A generated workload: cache tensors plus ground-truth cluster labels.
#[derive(Debug, Clone)]
pub struct ClusterWorkload {
    pub cache: LayerCache,
    /// Cluster id of each token, cluster-major: token t belongs to
    /// cluster t / per_cluster.
    pub labels: Vec<usize>,
    pub spec: ClusterSpec,
}

/// One gaussian f64 vector. Redraws in the (practically impossible)
/// event of an exactly zero vector so normalization is always defined.
fn unit_gaussian(rng: &mut SplitMix64, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.next_gaussian()).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

/// center + sigma * noise, re-normalized to unit length.
fn noisy_member(rng: &mut SplitMix64, center: &[f64], sigma: f64) -> Vec<f32> {
    loop {
        let v: Vec<f64> = center
            .iter()
            .map(|&c| c + sigma * rng.next_gaussian())
            .collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            return v.iter().map(|x| (x / n) as f32).collect();
        }
    }
}

fn pick_cluster(rng: &mut SplitMix64, weights: &[f64], clusters: usize) -> usize {
    let u = rng.next_f64();
    if weights.is_empty() {
        return ((u * clusters as f64) as usize).min(clusters - 1);
    }
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    clusters - 1
}

/// Generates the workload for `spec`. Identical specs produce
/// bit-identical workloads.
pub fn gen_clustered_keys(spec: &ClusterSpec) -> Result<ClusterWorkload> {
    spec.validate()?;
    let mut rng = SplitMix64::new(spec.seed);
    let d = spec.dim;
    let c = spec.clusters;
    let r = spec.per_cluster;
    let n = c * r;

    let centers: Vec<Vec<f64>> = (0..c).map(|_| unit_gaussian(&mut rng, d)).collect();
    rng.clear_spare();

    let mut key_rows: Vec<Vec<f32>> = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (ci, center) in centers.iter().enumerate() {
        for _ in 0..r {
            key_rows.push(noisy_member(&mut rng, center, spec.sigma));
            labels.push(ci);
        }
    }
    rng.clear_spare();

    let mut value_rows: Vec<Vec<f32>> = Vec::with_capacity(n);
    for center in &centers {
        for _ in 0..r {
            value_rows.push(noisy_member(&mut rng, center, spec.sigma));
        }
    }
    rng.clear_spare();

    let mut query_rows: Vec<Vec<f32>> = Vec::with_capacity(spec.query_count);
    for _ in 0..spec.query_count {
        let ci = pick_cluster(&mut rng, &spec.query_focus, c);
        query_rows.push(noisy_member(&mut rng, &centers[ci], spec.sigma));
        rng.clear_spare();
    }

    let keys = Matrix::from_rows(key_rows)?;
    let values = Matrix::from_rows(value_rows)?;
    let queries = if spec.query_count > 0 {
        Some(Matrix::from_rows(query_rows)?)
    } else {
        None
    };
    Ok(ClusterWorkload {
        cache: LayerCache::new(keys, values, queries)?,
        labels,
        spec: spec.clone(),
    })
}

/// Number of distinct cluster ids among the kept tokens. Panics on an
/// out-of-range token, which indicates a broken caller.
#[must_use]
pub fn cluster_coverage(kept: &[TokenIndex], labels: &[usize]) -> usize {
    let mut seen = std::collections::BTreeSet::new();
    for t in kept {
        seen.insert(labels[t.0]);
    }
    seen.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eviction::{evict, EvictionPolicy};
    use crate::scorers::ScorerKind;
    use crate::tensor::cosine_similarity;

    fn spec(seed: u64, sigma: f64) -> ClusterSpec {
        ClusterSpec {
            seed,
            clusters: 5,
            per_cluster: 20,
            dim: 64,
            sigma,
            query_count: 8,
            query_focus: vec![],
        }
    }

    #[test]
    fn shape_and_labels() {
        let w = gen_clustered_keys(&spec(1, 0.05)).unwrap();
        assert_eq!(w.cache.token_count(), 100);
        assert_eq!(w.cache.dim(), 64);
        assert_eq!(w.labels.len(), 100);
        assert_eq!(w.labels[0], 0);
        assert_eq!(w.labels[19], 0);
        assert_eq!(w.labels[20], 1);
        assert_eq!(w.labels[99], 4);
        assert_eq!(w.cache.queries.as_ref().unwrap().rows(), 8);
    }

    #[test]
    fn keys_are_unit_norm() {
        let w = gen_clustered_keys(&spec(2, 0.1)).unwrap();
        for i in 0..w.cache.token_count() {
            let norm: f64 = w.cache.keys.row(i).iter().map(|&v| f64::from(v) * f64::from(v)).sum();
            assert!((norm.sqrt() - 1.0).abs() < 1e-6, "row {i}");
        }
    }

    #[test]
    fn zero_noise_collapses_clusters() {
        let w = gen_clustered_keys(&spec(3, 0.0)).unwrap();
        for i in 0..20 {
            assert_eq!(w.cache.keys.row(i), w.cache.keys.row(0), "member {i}");
            let c = cosine_similarity(w.cache.keys.row(0), w.cache.keys.row(i));
            assert!(c >= 1.0 - 1e-12);
        }
        // Members of different clusters stay distinct.
        assert_ne!(w.cache.keys.row(0), w.cache.keys.row(20));
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let a = gen_clustered_keys(&spec(7, 0.05)).unwrap();
        let b = gen_clustered_keys(&spec(7, 0.05)).unwrap();
        assert_eq!(a.cache.keys, b.cache.keys);
        assert_eq!(a.cache.values, b.cache.values);
        assert_eq!(a.cache.queries.unwrap(), b.cache.queries.unwrap());
        assert_eq!(a.labels, b.labels);

        let c = gen_clustered_keys(&spec(8, 0.05)).unwrap();
        assert_ne!(a.cache.keys, c.cache.keys);
    }

    #[test]
    fn intra_cluster_similarity_beats_inter() {
        let w = gen_clustered_keys(&ClusterSpec {
            seed: 42,
            clusters: 5,
            per_cluster: 20,
            dim: 64,
            sigma: 0.05,
            query_count: 0,
            query_focus: vec![],
        })
        .unwrap();
        let (mut intra, mut inter) = ((0.0, 0u64), (0.0, 0u64));
        for a in 0..100 {
            for b in a + 1..100 {
                let c = cosine_similarity(w.cache.keys.row(a), w.cache.keys.row(b));
                if w.labels[a] == w.labels[b] {
                    intra = (intra.0 + c, intra.1 + 1);
                } else {
                    inter = (inter.0 + c, inter.1 + 1);
                }
            }
        }
        let intra_mean = intra.0 / intra.1 as f64;
        let inter_mean = inter.0 / inter.1 as f64;
        assert!(
            intra_mean > inter_mean,
            "intra {intra_mean} vs inter {inter_mean}"
        );
    }

    #[test]
    fn focused_zero_noise_baseline_keeps_one_cluster() {
        // With no noise and all queries on cluster 0, attention top-k
        // (k <= r) trivially keeps only cluster-0 tokens.
        let mut s = spec(11, 0.0);
        s.query_focus = vec![1.0, 0.0, 0.0, 0.0, 0.0];
        let w = gen_clustered_keys(&s).unwrap();
        let policy = EvictionPolicy {
            scorer: ScorerKind::WindowAttention { window_len: 4, pool_width: 1 },
            refine: None,
            protected_window: 0,
        };
        let out = evict(&w.cache, 10, &policy).unwrap();
        assert_eq!(cluster_coverage(&out.kept_indices, &w.labels), 1);
        for t in &out.kept_indices {
            assert_eq!(w.labels[t.0], 0);
        }
    }

    #[test]
    fn coverage_examples() {
        let labels = vec![0, 0, 1, 1, 2];
        assert_eq!(cluster_coverage(&[], &labels), 0);
        let one_each: Vec<TokenIndex> = vec![TokenIndex(0), TokenIndex(2), TokenIndex(4)];
        assert_eq!(cluster_coverage(&one_each, &labels), 3);
        assert_eq!(cluster_coverage(&[TokenIndex(0), TokenIndex(1)], &labels), 1);
    }

    #[test]
    fn spec_validation() {
        assert!(gen_clustered_keys(&ClusterSpec { clusters: 0, ..spec(1, 0.1) }).is_err());
        assert!(gen_clustered_keys(&ClusterSpec { dim: 1, ..spec(1, 0.1) }).is_err());
        assert!(gen_clustered_keys(&ClusterSpec { sigma: -0.1, ..spec(1, 0.1) }).is_err());
        let mut bad_focus = spec(1, 0.1);
        bad_focus.query_focus = vec![1.0, 2.0];
        assert!(gen_clustered_keys(&bad_focus).is_err());
        let mut zero_focus = spec(1, 0.1);
        zero_focus.query_focus = vec![0.0; 5];
        assert!(gen_clustered_keys(&zero_focus).is_err());
    }
}
