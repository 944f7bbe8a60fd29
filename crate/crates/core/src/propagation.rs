//! Signal propagation: T rounds of multiplicative score updates flowing
//! from each source node to its top-m neighbors.
//!
//! Update order is fixed: rounds outermost, then sources ascending, then
//! neighbors ascending. Neighborhoods and edge factors are computed once
//! from the static graph and reused every round, so running T rounds is
//! bit-identical to running one round T times.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_sparse_graph, SimilarityKind, SourceSelection, SparseGraph};
use crate::tensor::{LayerCache, ScoreVector};

/// Maximum supported round count. Propagation factors multiply per
/// round, so large T only drives scores toward 0 or overflow.
pub const MAX_ROUNDS: usize = 16;

/// What a source does to its neighbors' scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    /// s_j *= 1 - c, suppressing tokens similar to a source.
    Decay,
    /// s_j *= 1 + c, boosting tokens similar to a source.
    Enhanced,
    /// s_j = -inf, removing neighbors outright.
    Evicted,
}

impl Default for SignalKind {
    fn default() -> Self {
        SignalKind::Decay
    }
}

/// How many neighbors each source reaches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborPolicy {
    /// Always the top `m` neighbors.
    Fixed(usize),
    /// min(m_max, ceil(alpha * n)): small caches use proportionally
    /// fewer neighbors, long ones saturate at m_max.
    Adaptive { m_max: usize, alpha: f64 },
}

impl Default for NeighborPolicy {
    fn default() -> Self {
        NeighborPolicy::Adaptive {
            m_max: 64,
            alpha: 0.001,
        }
    }
}

impl NeighborPolicy {
    /// Resolves the neighbor count for an n-token cache.
    pub fn effective_m(&self, n: usize) -> Result<usize> {
        let m = match self {
            NeighborPolicy::Fixed(m) => *m,
            NeighborPolicy::Adaptive { m_max, alpha } => {
                if !alpha.is_finite() || *alpha <= 0.0 {
                    return Err(Error::config(format!(
                        "adaptive neighbor fraction must be positive, got {alpha}"
                    )));
                }
                (*m_max).min((alpha * n as f64).ceil() as usize)
            }
        };
        if m == 0 {
            return Err(Error::config(
                "neighbor policy resolves to zero neighbors".to_string(),
            ));
        }
        Ok(m)
    }
}

/// Full propagation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationConfig {
    /// Number of propagation rounds T. Zero disables refinement.
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default)]
    pub neighbors: NeighborPolicy,
    #[serde(default)]
    pub signal: SignalKind,
    /// Global multiplier on the clamped edge weight before it enters
    /// the decay/enhance formula. 1.0 uses edges as-is.
    #[serde(default = "default_decay_strength")]
    pub decay_strength: f64,
}

fn default_rounds() -> usize {
    1
}

fn default_decay_strength() -> f64 {
    1.0
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            rounds: default_rounds(),
            neighbors: NeighborPolicy::default(),
            signal: SignalKind::default(),
            decay_strength: default_decay_strength(),
        }
    }
}

impl PropagationConfig {
    fn validate(&self) -> Result<()> {
        if self.rounds > MAX_ROUNDS {
            return Err(Error::config(format!(
                "round count {} exceeds the cap of {MAX_ROUNDS}",
                self.rounds
            )));
        }
        if !self.decay_strength.is_finite() || self.decay_strength < 0.0 {
            return Err(Error::config(format!(
                "decay strength must be finite and non-negative, got {}",
                self.decay_strength
            )));
        }
        Ok(())
    }
}

/// Edge weight as used by the signal formulas: clamped to [0, 1] so
/// dissimilar tokens are never boosted, then scaled and re-clamped so
/// the multiplicative factor stays in range for any strength.
fn effective_coupling(edge: f64, strength: f64) -> f64 {
    (edge.clamp(0.0, 1.0) * strength).clamp(0.0, 1.0)
}

/// Applies T rounds of the configured signal over the graph.
///
/// Tokens outside every neighborhood come back bit-identical; with T=0
/// the whole vector does.
pub fn propagate(g: &SparseGraph, scores: &ScoreVector, cfg: &PropagationConfig) -> Result<ScoreVector> {
    cfg.validate()?;
    if scores.len() != g.n() {
        return Err(Error::invalid_argument(format!(
            "scores cover {} tokens, graph covers {}",
            scores.len(),
            g.n()
        )));
    }
    if cfg.rounds == 0 {
        return Ok(scores.clone());
    }
    if matches!(cfg.signal, SignalKind::Decay | SignalKind::Enhanced) {
        if let Some(i) = scores.as_slice().iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid_argument(format!(
                "{:?} propagation needs finite input scores, token {i} is {}",
                cfg.signal,
                scores.get(i)
            )));
        }
    }
    let m = cfg.neighbors.effective_m(g.n())?;

    // Neighborhoods and factors are frozen before the first round.
    let updates: Vec<(Vec<usize>, Vec<f64>)> = (0..g.source_count())
        .map(|a| {
            let neighbors: Vec<usize> = g.neighborhood(a, m).iter().map(|t| t.0).collect();
            let factors: Vec<f64> = neighbors
                .iter()
                .map(|&j| {
                    let c = effective_coupling(g.edge(a, j), cfg.decay_strength);
                    match cfg.signal {
                        SignalKind::Decay => 1.0 - c,
                        SignalKind::Enhanced => 1.0 + c,
                        SignalKind::Evicted => f64::NEG_INFINITY,
                    }
                })
                .collect();
            (neighbors, factors)
        })
        .collect();

    let mut out = scores.as_slice().to_vec();
    for _ in 0..cfg.rounds {
        for (neighbors, factors) in &updates {
            for (pos, &j) in neighbors.iter().enumerate() {
                match cfg.signal {
                    SignalKind::Evicted => out[j] = f64::NEG_INFINITY,
                    _ => out[j] *= factors[pos],
                }
            }
        }
    }
    ScoreVector::new(out)
}

/// Select sources, build the sparse graph, and propagate, returning the
/// refined score vector. T=0 skips the graph entirely and hands back the
/// input scores unchanged.
pub fn refine_scores(
    cache: &LayerCache,
    scores: &ScoreVector,
    sel: &SourceSelection,
    budget: usize,
    kind: SimilarityKind,
    cfg: &PropagationConfig,
) -> Result<ScoreVector> {
    cfg.validate()?;
    if cfg.rounds == 0 {
        return Ok(scores.clone());
    }
    let graph = build_sparse_graph(cache, scores, sel, budget, kind)?;
    propagate(&graph, scores, cfg)
}
