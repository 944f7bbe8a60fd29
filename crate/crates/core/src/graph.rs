//! Sparse token-similarity graph: top-scoring source nodes with cosine
//! edges from each source to every other token.
//!
//! Only source rows are materialized, so building the graph costs
//! k*(n-1) similarity evaluations rather than the n^2 of a full
//! pairwise matrix. The evaluation count is recorded on the graph so
//! tests can hold that line.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{dot_f64, l2_norm, l2_norm_rows, LayerCache, Matrix, ScoreVector, TokenIndex};

/// Which vector pair defines the similarity edge between a source token
/// and another token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityKind {
    KeyKey,
    QueryKey,
    QueryQuery,
    KeyValue,
    ValueValue,
}

impl Default for SimilarityKind {
    fn default() -> Self {
        SimilarityKind::KeyKey
    }
}

impl SimilarityKind {
    /// Query-side kinds pair source tokens with query rows by position
    /// and therefore need a query row for every token.
    #[must_use]
    pub fn needs_queries(self) -> bool {
        matches!(self, SimilarityKind::QueryKey | SimilarityKind::QueryQuery)
    }
}

/// How many source nodes to select: a fraction of the layer budget or an
/// absolute count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceSelection {
    /// floor(ratio * budget) sources, ratio in (0, 1].
    Ratio(f64),
    /// Exactly this many sources, capped at the token count.
    Absolute(usize),
}

impl Default for SourceSelection {
    fn default() -> Self {
        SourceSelection::Ratio(0.3)
    }
}

impl SourceSelection {
    /// Resolves the source count for `n` tokens under `budget`. Always
    /// at least 1 and at most n.
    pub fn resolve(&self, n: usize, budget: usize) -> Result<usize> {
        let raw = match self {
            SourceSelection::Ratio(r) => {
                if !r.is_finite() || *r <= 0.0 || *r > 1.0 {
                    return Err(Error::config(format!(
                        "source ratio must lie in (0, 1], got {r}"
                    )));
                }
                (r * budget as f64).floor() as usize
            }
            SourceSelection::Absolute(k) => *k,
        };
        Ok(raw.clamp(1, n.max(1)).min(n))
    }
}

/// Sparse similarity graph over one layer's tokens.
///
/// `edges` is k x n row-major: row a holds the edge from source a to
/// every token, with the source's own column fixed at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraph {
    n: usize,
    source_ids: Vec<TokenIndex>,
    edges: Vec<f64>,
    similarity_evals: u64,
}

impl SparseGraph {
    /// Token count of the underlying layer.
    #[must_use]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of source nodes (graph rows).
    #[must_use]
    pub fn source_count(&self) -> usize {
        self.source_ids.len()
    }

    /// Source token ids, strictly ascending.
    #[must_use]
    pub fn source_ids(&self) -> &[TokenIndex] {
        &self.source_ids
    }

    /// Edge weight from source row `a` to token `j`.
    #[must_use]
    pub fn edge(&self, a: usize, j: usize) -> f64 {
        self.edges[a * self.n + j]
    }

    /// Full edge row for source `a`.
    #[must_use]
    pub fn edge_row(&self, a: usize) -> &[f64] {
        &self.edges[a * self.n..(a + 1) * self.n]
    }

    /// Number of cosine evaluations spent building the graph.
    #[must_use]
    pub fn similarity_evals(&self) -> u64 {
        self.similarity_evals
    }

    /// Test-only constructor for exact hand-picked edge values.
    #[cfg(test)]
    pub(crate) fn from_raw_parts(n: usize, source_ids: Vec<TokenIndex>, edges: Vec<f64>) -> Self {
        assert_eq!(edges.len(), n * source_ids.len());
        let k = source_ids.len() as u64;
        SparseGraph {
            n,
            source_ids,
            edges,
            similarity_evals: k * (n as u64 - 1),
        }
    }

    /// The min(m, n-1) tokens with the largest edges from source row
    /// `a`, excluding the source itself. Ties go to the lower token id;
    /// the result is sorted ascending.
    #[must_use]
    pub fn neighborhood(&self, a: usize, m: usize) -> Vec<TokenIndex> {
        assert!(a < self.source_count(), "source row {a} out of range");
        assert!(m >= 1, "neighborhood size must be at least 1");
        let source = self.source_ids[a].0;
        let row = self.edge_row(a);
        let mut candidates: Vec<usize> = (0..self.n).filter(|&j| j != source).collect();
        let take = m.min(candidates.len());
        if take == 0 {
            return Vec::new();
        }
        let by_edge_desc = |x: &usize, y: &usize| {
            row[*y]
                .partial_cmp(&row[*x])
                .expect("edges are never NaN")
                .then(x.cmp(y))
        };
        if take < candidates.len() {
            candidates.select_nth_unstable_by(take - 1, by_edge_desc);
            candidates.truncate(take);
        }
        candidates.sort_unstable();
        candidates.into_iter().map(TokenIndex).collect()
    }
}

/// Picks the source set: the `k` highest-scoring tokens, ties to the
/// lower index, returned ascending. `k` comes from `sel` resolved
/// against the layer budget.
pub fn select_source_nodes(
    scores: &ScoreVector,
    sel: &SourceSelection,
    budget: usize,
) -> Result<Vec<TokenIndex>> {
    let n = scores.len();
    if n == 0 {
        return Err(Error::invalid_argument("cannot select sources from empty scores"));
    }
    let k = sel.resolve(n, budget)?;
    let mut idx: Vec<usize> = (0..n).collect();
    let by_score_desc = |a: &usize, b: &usize| {
        scores
            .get(*b)
            .partial_cmp(&scores.get(*a))
            .expect("scores are never NaN")
            .then(a.cmp(b))
    };
    if k < n {
        idx.select_nth_unstable_by(k - 1, by_score_desc);
        idx.truncate(k);
    }
    idx.sort_unstable();
    Ok(idx.into_iter().map(TokenIndex).collect())
}

fn side_matrices<'c>(
    kind: SimilarityKind,
    cache: &'c LayerCache,
    queries: Option<&'c Matrix>,
) -> (&'c Matrix, &'c Matrix) {
    match kind {
        SimilarityKind::KeyKey => (&cache.keys, &cache.keys),
        SimilarityKind::QueryKey => (queries.unwrap(), &cache.keys),
        SimilarityKind::QueryQuery => (queries.unwrap(), queries.unwrap()),
        SimilarityKind::KeyValue => (&cache.keys, &cache.values),
        SimilarityKind::ValueValue => (&cache.values, &cache.values),
    }
}

/// Builds the sparse graph for one layer.
///
/// Rows are computed in parallel, but every edge depends on a single
/// vector pair, so the result is bit-identical for any thread count.
/// Row norms are computed once up front; each edge still equals
/// `cosine_similarity` on the same pair bit for bit, because the cached
/// norm is the same `l2_norm` value that a direct call would produce.
pub fn build_sparse_graph(
    cache: &LayerCache,
    scores: &ScoreVector,
    sel: &SourceSelection,
    budget: usize,
    kind: SimilarityKind,
) -> Result<SparseGraph> {
    let n = cache.token_count();
    if scores.len() != n {
        return Err(Error::invalid_argument(format!(
            "scores cover {} tokens, cache holds {n}",
            scores.len()
        )));
    }
    let queries = if kind.needs_queries() {
        let q = cache.queries.as_ref().ok_or_else(|| {
            Error::config(format!("{kind:?} similarity requires a query matrix"))
        })?;
        if q.rows() < n {
            return Err(Error::config(format!(
                "{kind:?} similarity pairs tokens with query rows by position, \
                 but only {} query rows cover {n} tokens",
                q.rows()
            )));
        }
        Some(q)
    } else {
        None
    };

    let source_ids = select_source_nodes(scores, sel, budget)?;
    let k = source_ids.len();
    let (a_mat, b_mat) = side_matrices(kind, cache, queries);
    let b_norms = l2_norm_rows(b_mat);
    let a_norms: Vec<f64> = source_ids.iter().map(|t| l2_norm(a_mat.row(t.0))).collect();

    let mut edges = vec![0.0f64; k * n];
    let evals: u64 = edges
        .par_chunks_mut(n)
        .zip(source_ids.par_iter().zip(a_norms.par_iter()))
        .map(|(row, (&TokenIndex(source), &na))| {
            let u = a_mat.row(source);
            let mut count = 0u64;
            for j in 0..n {
                if j == source {
                    continue;
                }
                let nb = b_norms[j];
                row[j] = if na == 0.0 || nb == 0.0 {
                    0.0
                } else {
                    (dot_f64(u, b_mat.row(j)) / (na * nb)).clamp(-1.0, 1.0)
                };
                count += 1;
            }
            count
        })
        .sum();

    Ok(SparseGraph {
        n,
        source_ids,
        edges,
        similarity_evals: evals,
    })
}
