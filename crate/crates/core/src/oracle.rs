//! Dense brute-force reference implementations, for tests only.
//!
//! Everything here recomputes results from first principles with plain
//! loops over a full n x n similarity matrix, trading all performance
//! for obviousness. The production path must agree with these within
//! the tolerances pinned in the acceptance suite. Nothing in here calls
//! into the graph or propagation modules.

use crate::error::{Error, Result};
use crate::graph::{SimilarityKind, SourceSelection};
use crate::propagation::{PropagationConfig, SignalKind};
use crate::tensor::{LayerCache, Matrix, ScoreVector};

fn dense_cosine(a: &[f32], b: &[f32]) -> f64 {
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for i in 0..a.len() {
        let x = f64::from(a[i]);
        let y = f64::from(b[i]);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let c = dot / (na.sqrt() * nb.sqrt());
    // Cosine is a value in [-1, 1] by definition; rounding overshoot is
    // discarded here exactly as the production kernel does.
    c.clamp(-1.0, 1.0)
}

/// Full pairwise cosine matrix over the rows of `m`.
#[must_use]
pub fn dense_full_similarity(m: &Matrix) -> Vec<Vec<f64>> {
    let n = m.rows();
    (0..n)
        .map(|i| (0..n).map(|j| dense_cosine(m.row(i), m.row(j))).collect())
        .collect()
}

/// Pairwise cosine matrix between the rows of `a` and the rows of `b`.
#[must_use]
pub fn dense_cross_similarity(a: &Matrix, b: &Matrix) -> Vec<Vec<f64>> {
    (0..a.rows())
        .map(|i| (0..b.rows()).map(|j| dense_cosine(a.row(i), b.row(j))).collect())
        .collect()
}

/// Reference refinement: same contract as the sparse pipeline, computed
/// against the dense similarity matrix with naive selection loops.
pub fn dense_reference_refine(
    cache: &LayerCache,
    scores: &ScoreVector,
    sel: &SourceSelection,
    budget: usize,
    kind: SimilarityKind,
    cfg: &PropagationConfig,
) -> Result<ScoreVector> {
    let n = cache.token_count();
    if scores.len() != n {
        return Err(Error::invalid_argument("score/cache length mismatch"));
    }
    if cfg.rounds == 0 {
        return Ok(scores.clone());
    }
    if n == 0 {
        return Err(Error::invalid_argument("empty cache"));
    }
    if matches!(cfg.signal, SignalKind::Decay | SignalKind::Enhanced)
        && scores.as_slice().iter().any(|s| !s.is_finite())
    {
        return Err(Error::invalid_argument("non-finite input scores"));
    }

    // Source-side and target-side row sets for the similarity kind.
    let queries = cache.queries.as_ref();
    if kind.needs_queries() {
        match queries {
            Some(q) if q.rows() >= n => {}
            _ => return Err(Error::config("insufficient query rows for this kind")),
        }
    }
    let (a_side, b_side): (&Matrix, &Matrix) = match kind {
        SimilarityKind::KeyKey => (&cache.keys, &cache.keys),
        SimilarityKind::QueryKey => (queries.unwrap(), &cache.keys),
        SimilarityKind::QueryQuery => (queries.unwrap(), queries.unwrap()),
        SimilarityKind::KeyValue => (&cache.keys, &cache.values),
        SimilarityKind::ValueValue => (&cache.values, &cache.values),
    };
    let sim = dense_cross_similarity(a_side, b_side);

    // Top-k sources: stable sort over (score descending, index
    // ascending), then re-sorted ascending.
    let k = match sel {
        SourceSelection::Ratio(r) => {
            if !r.is_finite() || *r <= 0.0 || *r > 1.0 {
                return Err(Error::config("ratio out of range"));
            }
            (r * budget as f64).floor() as usize
        }
        SourceSelection::Absolute(a) => *a,
    }
    .min(n)
    .max(1);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scores
            .get(b)
            .partial_cmp(&scores.get(a))
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut sources = order[..k].to_vec();
    sources.sort_unstable();

    // Effective neighbor count, then a fixed top-m neighborhood per
    // source from the dense row (ties to the lower index).
    let m = match cfg.neighbors {
        crate::propagation::NeighborPolicy::Fixed(m) => m,
        crate::propagation::NeighborPolicy::Adaptive { m_max, alpha } => {
            if !alpha.is_finite() || alpha <= 0.0 {
                return Err(Error::config("bad adaptive fraction"));
            }
            m_max.min((alpha * n as f64).ceil() as usize)
        }
    };
    if m == 0 {
        return Err(Error::config("zero neighbors"));
    }
    let neighborhoods: Vec<Vec<usize>> = sources
        .iter()
        .map(|&s| {
            let mut others: Vec<usize> = (0..n).filter(|&j| j != s).collect();
            others.sort_by(|&x, &y| {
                sim[s][y].partial_cmp(&sim[s][x]).unwrap().then(x.cmp(&y))
            });
            others.truncate(m.min(n - 1));
            others.sort_unstable();
            others
        })
        .collect();

    let mut out: Vec<f64> = scores.as_slice().to_vec();
    for _ in 0..cfg.rounds {
        for (si, &s) in sources.iter().enumerate() {
            for &j in &neighborhoods[si] {
                let c = (sim[s][j].clamp(0.0, 1.0) * cfg.decay_strength).clamp(0.0, 1.0);
                match cfg.signal {
                    SignalKind::Decay => out[j] *= 1.0 - c,
                    SignalKind::Enhanced => out[j] *= 1.0 + c,
                    SignalKind::Evicted => out[j] = f64::NEG_INFINITY,
                }
            }
        }
    }
    ScoreVector::new(out)
}
