//! Budgeted token selection and compressed-cache assembly.
//!
//! An eviction run scores every token with the configured baseline,
//! optionally refines those scores over the similarity graph, then keeps
//! exactly `budget` tokens: the protected trailing window first, the
//! highest-scoring remaining tokens after it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{SimilarityKind, SourceSelection};
use crate::propagation::{refine_scores, PropagationConfig};
use crate::scorers::{compute_scores, ScorerKind};
use crate::tensor::{LayerCache, Matrix, ScoreVector, TokenIndex};

/// Graph-refinement stage settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefineConfig {
    #[serde(default)]
    pub source: SourceSelection,
    #[serde(default)]
    pub kind: SimilarityKind,
    #[serde(default)]
    pub propagation: PropagationConfig,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            source: SourceSelection::default(),
            kind: SimilarityKind::default(),
            propagation: PropagationConfig::default(),
        }
    }
}

/// Complete eviction policy: baseline scorer, optional refinement, and
/// the protected observation window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvictionPolicy {
    pub scorer: ScorerKind,
    #[serde(default)]
    pub refine: Option<RefineConfig>,
    /// Trailing tokens that are always kept. They count against the
    /// budget and are excluded from source selection and decay.
    #[serde(default)]
    pub protected_window: usize,
}

/// Output of one eviction run.
#[derive(Debug, Clone)]
pub struct EvictionResult {
    /// Kept token ids, strictly ascending, exactly `budget` of them.
    pub kept_indices: Vec<TokenIndex>,
    pub keys_sub: Matrix,
    pub values_sub: Matrix,
    /// Post-refinement scores for all n tokens (window tokens keep
    /// their baseline scores).
    pub refined_scores: ScoreVector,
}

/// The k highest-scoring indices, ties to the lowest index, sorted
/// ascending. -inf entries are picked only once finite ones run out.
pub fn select_topk(scores: &ScoreVector, k: usize) -> Result<Vec<TokenIndex>> {
    let n = scores.len();
    if k > n {
        return Err(Error::invalid_argument(format!(
            "cannot keep {k} of {n} tokens"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let by_score_desc = |a: &usize, b: &usize| {
        scores
            .get(*b)
            .partial_cmp(&scores.get(*a))
            .expect("scores are never NaN")
            .then(a.cmp(b))
    };
    if k < n && k > 0 {
        idx.select_nth_unstable_by(k - 1, by_score_desc);
    }
    idx.truncate(k);
    idx.sort_unstable();
    Ok(idx.into_iter().map(TokenIndex).collect())
}

/// Copies the rows named by `indices` out of the cache. Indices must be
/// strictly ascending and in range.
pub fn gather(cache: &LayerCache, indices: &[TokenIndex]) -> Result<(Matrix, Matrix)> {
    let n = cache.token_count();
    for pair in indices.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::invalid_argument(format!(
                "kept indices must be strictly ascending, saw {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    let raw: Vec<usize> = indices.iter().map(|t| t.0).collect();
    if let Some(&bad) = raw.iter().find(|&&i| i >= n) {
        return Err(Error::invalid_argument(format!(
            "kept index {bad} out of range for {n} tokens"
        )));
    }
    Ok((cache.keys.select_rows(&raw)?, cache.values.select_rows(&raw)?))
}

/// Runs the full policy and keeps exactly `budget` tokens.
pub fn evict(cache: &LayerCache, budget: usize, policy: &EvictionPolicy) -> Result<EvictionResult> {
    let n = cache.token_count();
    if budget > n {
        return Err(Error::invalid_argument(format!(
            "budget {budget} exceeds the {n} cached tokens"
        )));
    }
    let w = policy.protected_window;
    if w > budget {
        return Err(Error::invalid_argument(format!(
            "protected window {w} exceeds budget {budget}"
        )));
    }
    let head_n = n - w;
    let base = compute_scores(&policy.scorer, cache)?;

    // Refinement runs on the sub-problem before the window, so window
    // tokens can neither become sources nor receive decay.
    let refined_full = match (&policy.refine, head_n) {
        (Some(rc), 1..) => {
            let sub = cache.truncated(head_n)?;
            let head = ScoreVector::new(base.as_slice()[..head_n].to_vec())?;
            let refined_head = refine_scores(&sub, &head, &rc.source, budget, rc.kind, &rc.propagation)?;
            let mut all = refined_head.into_vec();
            all.extend_from_slice(&base.as_slice()[head_n..]);
            ScoreVector::new(all)?
        }
        _ => base.clone(),
    };

    let head_scores = ScoreVector::new(refined_full.as_slice()[..head_n].to_vec())?;
    let mut kept = select_topk(&head_scores, budget - w)?;
    kept.extend((head_n..n).map(TokenIndex));

    let (keys_sub, values_sub) = gather(cache, &kept)?;
    if kept.len() != budget {
        return Err(Error::Invariant(format!(
            "kept {} tokens against a budget of {budget}",
            kept.len()
        )));
    }
    Ok(EvictionResult {
        kept_indices: kept,
        keys_sub,
        values_sub,
        refined_scores: refined_full,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::{NeighborPolicy, SignalKind};
    use crate::rng::SplitMix64;

    fn indices(v: &[usize]) -> Vec<TokenIndex> {
        v.iter().copied().map(TokenIndex).collect()
    }

    fn random_cache(seed: u64, n: usize, d: usize, q: usize) -> LayerCache {
        let mut rng = SplitMix64::new(seed);
        let mut rows = |count: usize| -> Matrix {
            Matrix::from_rows(
                (0..count)
                    .map(|_| (0..d).map(|_| rng.next_gaussian() as f32).collect())
                    .collect(),
            )
            .unwrap()
        };
        let keys = rows(n);
        let values = rows(n);
        let queries = rows(q);
        LayerCache::new(keys, values, Some(queries)).unwrap()
    }

    fn decay_refine(rounds: usize, m: usize, k: usize) -> RefineConfig {
        RefineConfig {
            source: SourceSelection::Absolute(k),
            kind: SimilarityKind::KeyKey,
            propagation: PropagationConfig {
                rounds,
                neighbors: NeighborPolicy::Fixed(m),
                signal: SignalKind::Decay,
                decay_strength: 1.0,
            },
        }
    }

    #[test]
    fn select_topk_examples() {
        let s = ScoreVector::new(vec![3.0, 1.0, 2.0]).unwrap();
        assert_eq!(select_topk(&s, 2).unwrap(), indices(&[0, 2]));

        let tied = ScoreVector::new(vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(select_topk(&tied, 2).unwrap(), indices(&[0, 1]));

        assert_eq!(select_topk(&s, 0).unwrap(), indices(&[]));
        assert!(select_topk(&s, 4).is_err());
    }

    #[test]
    fn select_topk_defers_neg_infinity() {
        let s = ScoreVector::new(vec![1.0, f64::NEG_INFINITY, 0.5, f64::NEG_INFINITY]).unwrap();
        assert_eq!(select_topk(&s, 2).unwrap(), indices(&[0, 2]));
        assert_eq!(select_topk(&s, 3).unwrap(), indices(&[0, 1, 2]));
    }

    #[test]
    fn select_topk_is_affine_invariant() {
        let mut rng = SplitMix64::new(21);
        for _ in 0..20 {
            let scores: Vec<f64> = (0..30).map(|_| rng.next_f64()).collect();
            let shifted: Vec<f64> = scores.iter().map(|s| 2.0 * s + 0.5).collect();
            let a = ScoreVector::new(scores).unwrap();
            let b = ScoreVector::new(shifted).unwrap();
            assert_eq!(select_topk(&a, 7).unwrap(), select_topk(&b, 7).unwrap());
        }
    }

    #[test]
    fn gather_examples() {
        let cache = random_cache(1, 8, 4, 2);
        let all: Vec<TokenIndex> = (0..8).map(TokenIndex).collect();
        let (k, v) = gather(&cache, &all).unwrap();
        assert_eq!(k, cache.keys);
        assert_eq!(v, cache.values);

        let (k, v) = gather(&cache, &[]).unwrap();
        assert_eq!(k.rows(), 0);
        assert_eq!(k.cols(), 4);
        assert_eq!(v.rows(), 0);

        let (k, _) = gather(&cache, &indices(&[2, 5])).unwrap();
        assert_eq!(k.row(0), cache.keys.row(2));
        assert_eq!(k.row(1), cache.keys.row(5));

        assert!(gather(&cache, &indices(&[5, 2])).is_err());
        assert!(gather(&cache, &indices(&[3, 3])).is_err());
        assert!(gather(&cache, &indices(&[8])).is_err());
    }

    #[test]
    fn full_budget_keeps_everything() {
        let cache = random_cache(2, 4, 4, 2);
        let policy = EvictionPolicy {
            scorer: ScorerKind::KNorm { high_norm_important: false },
            refine: None,
            protected_window: 0,
        };
        let out = evict(&cache, 4, &policy).unwrap();
        assert_eq!(out.kept_indices, indices(&[0, 1, 2, 3]));
        assert_eq!(out.keys_sub, cache.keys);
        assert_eq!(out.values_sub, cache.values);
    }

    #[test]
    fn worked_three_token_fixture() {
        // Token 0 and 1 share a key; token 2 is orthogonal. One query
        // leaning toward the shared direction scores 0 and 1 equally,
        // ahead of 2. The single source (token 0) decays its duplicate,
        // so refinement keeps {0, 2} where the baseline keeps {0, 1}.
        let keys =
            Matrix::from_rows(vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let queries = Matrix::from_rows(vec![vec![1.0, 0.2]]).unwrap();
        let cache = LayerCache::new(keys.clone(), keys, Some(queries)).unwrap();
        let scorer = ScorerKind::WindowAttention { window_len: 1, pool_width: 1 };

        let baseline = EvictionPolicy {
            scorer,
            refine: None,
            protected_window: 0,
        };
        let refined = EvictionPolicy {
            scorer,
            refine: Some(decay_refine(1, 1, 1)),
            protected_window: 0,
        };
        assert_eq!(evict(&cache, 2, &baseline).unwrap().kept_indices, indices(&[0, 1]));
        let out = evict(&cache, 2, &refined).unwrap();
        assert_eq!(out.kept_indices, indices(&[0, 2]));
        assert_eq!(out.refined_scores.get(1), 0.0);
    }

    #[test]
    fn zero_rounds_matches_baseline() {
        for seed in 0u64..10 {
            let cache = random_cache(seed, 32, 8, 8);
            let scorer = ScorerKind::WindowAttention { window_len: 4, pool_width: 1 };
            let baseline = EvictionPolicy { scorer, refine: None, protected_window: 2 };
            let inert = EvictionPolicy {
                scorer,
                refine: Some(decay_refine(0, 4, 4)),
                protected_window: 2,
            };
            let a = evict(&cache, 12, &baseline).unwrap();
            let b = evict(&cache, 12, &inert).unwrap();
            assert_eq!(a.kept_indices, b.kept_indices, "seed {seed}");
        }
    }

    #[test]
    fn window_tokens_always_survive() {
        // Token 2 has by far the largest norm, so the low-norm-first
        // scorer ranks it last; the protected window keeps it anyway.
        let keys = Matrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![5.0, 0.0]]).unwrap();
        let cache = LayerCache::new(keys.clone(), keys, None).unwrap();
        let policy = EvictionPolicy {
            scorer: ScorerKind::KNorm { high_norm_important: false },
            refine: None,
            protected_window: 1,
        };
        let out = evict(&cache, 2, &policy).unwrap();
        assert_eq!(out.kept_indices, indices(&[0, 2]));

        let unprotected = EvictionPolicy { protected_window: 0, ..policy };
        let out = evict(&cache, 2, &unprotected).unwrap();
        assert_eq!(out.kept_indices, indices(&[0, 1]));
    }

    #[test]
    fn window_is_outside_refinement() {
        for seed in 30u64..35 {
            let cache = random_cache(seed, 40, 8, 40);
            let w = 4;
            let policy = EvictionPolicy {
                scorer: ScorerKind::CumulativeAttention,
                refine: Some(decay_refine(2, 6, 8)),
                protected_window: w,
            };
            let base = compute_scores(&policy.scorer, &cache).unwrap();
            let out = evict(&cache, 16, &policy).unwrap();
            let n = cache.token_count();
            // Window scores pass through untouched, bit for bit.
            for j in n - w..n {
                assert_eq!(out.refined_scores.get(j).to_bits(), base.get(j).to_bits());
            }
            for (offset, j) in (n - w..n).enumerate() {
                assert_eq!(out.kept_indices[16 - w + offset], TokenIndex(j));
            }
            assert_eq!(out.kept_indices.len(), 16);
        }
    }

    #[test]
    fn evicted_signal_backfills_to_meet_budget() {
        // All five keys identical: the single source marks the other
        // four -inf, leaving one finite score for a budget of three.
        let keys = Matrix::from_rows(vec![vec![1.0, 0.0]; 5]).unwrap();
        let cache = LayerCache::new(keys.clone(), keys, None).unwrap();
        let mut rc = decay_refine(1, 4, 1);
        rc.propagation.signal = SignalKind::Evicted;
        let policy = EvictionPolicy {
            scorer: ScorerKind::KNorm { high_norm_important: false },
            refine: Some(rc),
            protected_window: 0,
        };
        let out = evict(&cache, 3, &policy).unwrap();
        assert_eq!(out.kept_indices.len(), 3);
        // Source 0 survives on a finite score; the lowest-index evicted
        // tokens fill the remaining slots.
        assert_eq!(out.kept_indices, indices(&[0, 1, 2]));
        assert_eq!(out.refined_scores.get(1), f64::NEG_INFINITY);
    }

    #[test]
    fn budget_and_window_violations() {
        let cache = random_cache(6, 8, 4, 2);
        let policy = EvictionPolicy {
            scorer: ScorerKind::KNorm { high_norm_important: false },
            refine: None,
            protected_window: 0,
        };
        assert!(evict(&cache, 9, &policy).is_err());
        let bad_window = EvictionPolicy { protected_window: 5, ..policy };
        assert!(evict(&cache, 4, &bad_window).is_err());
    }

    #[test]
    fn policy_json_round_trip() {
        let policy = EvictionPolicy {
            scorer: ScorerKind::WindowAttention { window_len: 8, pool_width: 3 },
            refine: Some(RefineConfig::default()),
            protected_window: 4,
        };
        let json = serde_json::to_string(&policy).unwrap();
        let back: EvictionPolicy = serde_json::from_str(&json).unwrap();
        assert_eq!(back, policy);

        // Defaults: no refinement, no protected window.
        let minimal: EvictionPolicy =
            serde_json::from_str(r#"{"scorer":{"kind":"cumulative_attention"}}"#).unwrap();
        assert_eq!(minimal.refine, None);
        assert_eq!(minimal.protected_window, 0);
    }
}
