//! Baseline importance scorers and per-layer budget allocation.
//!
//! These produce the initial score vector that graph refinement then
//! adjusts. Three families are covered: key-norm scoring, attention over
//! a recent observation window, and cumulative attention over all
//! queries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{dot_f64, l2_norm, softmax_row, LayerCache, Matrix, ScoreVector};

/// Observation-window settings for the windowed attention scorer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    /// Number of trailing query rows to average over.
    #[serde(default = "default_window_len")]
    pub window_len: usize,
    /// Width of the 1-D sliding max-pool applied to the averaged
    /// scores; 1 disables pooling.
    #[serde(default = "default_pool_width")]
    pub pool_width: usize,
}

fn default_window_len() -> usize {
    32
}

fn default_pool_width() -> usize {
    1
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            window_len: default_window_len(),
            pool_width: default_pool_width(),
        }
    }
}

/// Which baseline scorer produces the initial importance scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScorerKind {
    /// Scores by key norm. Low norm ranks as important by default; set
    /// `high_norm_important` to flip the sign convention.
    KNorm {
        #[serde(default)]
        high_norm_important: bool,
    },
    /// Mean attention received from a trailing window of query rows,
    /// optionally max-pooled.
    WindowAttention {
        #[serde(default = "default_window_len")]
        window_len: usize,
        #[serde(default = "default_pool_width")]
        pool_width: usize,
    },
    /// Attention summed over every query row.
    CumulativeAttention,
}

/// Key-norm importance: score_i = -l2_norm(key_i).
#[must_use]
pub fn score_knorm(keys: &Matrix) -> ScoreVector {
    let values: Vec<f64> = (0..keys.rows()).map(|i| -l2_norm(keys.row(i))).collect();
    ScoreVector::new(values).expect("norms are finite")
}

fn attention_probs(query: &[f32], keys: &Matrix) -> Vec<f64> {
    let d = keys.cols();
    let scale = if d == 0 { 0.0 } else { 1.0 / (d as f64).sqrt() };
    let logits: Vec<f64> = (0..keys.rows())
        .map(|i| dot_f64(query, keys.row(i)) * scale)
        .collect();
    softmax_row(&logits)
}

/// Sliding max-pool of width `p`, stride 1, output length preserved.
/// Token i pools over [i - (p-1)/2, i + p/2], truncated at the edges.
fn max_pool_1d(scores: &[f64], p: usize) -> Vec<f64> {
    if p <= 1 {
        return scores.to_vec();
    }
    let n = scores.len();
    let left = (p - 1) / 2;
    let right = p / 2;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(left);
            let hi = (i + right).min(n - 1);
            scores[lo..=hi].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Mean attention over the last `cfg.window_len` query rows, followed by
/// optional max-pooling.
pub fn score_window_attention(
    queries: &Matrix,
    keys: &Matrix,
    cfg: &WindowConfig,
) -> Result<ScoreVector> {
    if queries.cols() != keys.cols() {
        return Err(Error::invalid_argument(format!(
            "query dimension {} does not match key dimension {}",
            queries.cols(),
            keys.cols()
        )));
    }
    if cfg.window_len == 0 || cfg.pool_width == 0 {
        return Err(Error::invalid_argument(
            "window_len and pool_width must be at least 1",
        ));
    }
    if queries.rows() < cfg.window_len {
        return Err(Error::invalid_argument(format!(
            "observation window of {} rows exceeds the {} available query rows",
            cfg.window_len,
            queries.rows()
        )));
    }
    let n = keys.rows();
    let mut sums = vec![0.0f64; n];
    let start = queries.rows() - cfg.window_len;
    // Rows accumulate in ascending order so the result is reproducible.
    for r in start..queries.rows() {
        let probs = attention_probs(queries.row(r), keys);
        for i in 0..n {
            sums[i] += probs[i];
        }
    }
    let w = cfg.window_len as f64;
    let means: Vec<f64> = sums.into_iter().map(|s| s / w).collect();
    ScoreVector::new(max_pool_1d(&means, cfg.pool_width))
}

/// Attention summed over all query rows.
pub fn score_cumulative_attention(queries: &Matrix, keys: &Matrix) -> Result<ScoreVector> {
    if queries.cols() != keys.cols() {
        return Err(Error::invalid_argument(format!(
            "query dimension {} does not match key dimension {}",
            queries.cols(),
            keys.cols()
        )));
    }
    if queries.rows() == 0 {
        return Err(Error::invalid_argument(
            "cumulative attention needs at least one query row",
        ));
    }
    let n = keys.rows();
    let mut sums = vec![0.0f64; n];
    for r in 0..queries.rows() {
        let probs = attention_probs(queries.row(r), keys);
        for i in 0..n {
            sums[i] += probs[i];
        }
    }
    ScoreVector::new(sums)
}

/// Runs the configured scorer against a layer cache.
pub fn compute_scores(kind: &ScorerKind, cache: &LayerCache) -> Result<ScoreVector> {
    match kind {
        ScorerKind::KNorm { high_norm_important } => {
            let base = score_knorm(&cache.keys);
            if *high_norm_important {
                ScoreVector::new(base.as_slice().iter().map(|s| -s).collect())
            } else {
                Ok(base)
            }
        }
        ScorerKind::WindowAttention {
            window_len,
            pool_width,
        } => {
            let queries = cache.queries.as_ref().ok_or_else(|| {
                Error::invalid_argument("window attention scorer requires queries")
            })?;
            score_window_attention(
                queries,
                &cache.keys,
                &WindowConfig {
                    window_len: *window_len,
                    pool_width: *pool_width,
                },
            )
        }
        ScorerKind::CumulativeAttention => {
            let queries = cache.queries.as_ref().ok_or_else(|| {
                Error::invalid_argument("cumulative attention scorer requires queries")
            })?;
            score_cumulative_attention(queries, &cache.keys)
        }
    }
}

/// Splits `total` evenly across `num_layers`; earlier layers absorb the
/// remainder one token each.
pub fn allocate_budget_uniform(total: usize, num_layers: usize) -> Result<Vec<usize>> {
    if num_layers == 0 {
        return Err(Error::invalid_argument("need at least one layer"));
    }
    let base = total / num_layers;
    let rem = total % num_layers;
    Ok((0..num_layers)
        .map(|l| base + usize::from(l < rem))
        .collect())
}

/// Bottom-heavy allocation: layer l carries unnormalized weight
/// 1 - l*(1 - 1/eta)/(M-1), so layer 0 gets eta times the share of the
/// last layer. Floors are topped up one token each from layer 0 upward
/// until the budgets sum to `total`.
pub fn allocate_budget_pyramid(total: usize, num_layers: usize, eta: f64) -> Result<Vec<usize>> {
    if num_layers == 0 {
        return Err(Error::invalid_argument("need at least one layer"));
    }
    if !eta.is_finite() || eta <= 1.0 {
        return Err(Error::invalid_argument(format!(
            "taper must be a finite value greater than 1, got {eta}"
        )));
    }
    if num_layers == 1 {
        return Ok(vec![total]);
    }
    let m = num_layers as f64;
    let slope = (1.0 - 1.0 / eta) / (m - 1.0);
    let weights: Vec<f64> = (0..num_layers).map(|l| 1.0 - l as f64 * slope).collect();
    let weight_sum: f64 = weights.iter().sum();
    let mut budgets: Vec<usize> = weights
        .iter()
        .map(|w| (total as f64 * w / weight_sum).floor() as usize)
        .collect();
    let assigned: usize = budgets.iter().sum();
    let remainder = total - assigned;
    for i in 0..remainder {
        budgets[i % num_layers] += 1;
    }
    Ok(budgets)
}
