//! Diagnostics: pairwise-similarity statistics, 2-D PCA projection, and
//! the KV-cache memory model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{cosine_similarity, Matrix, TokenIndex};

/// Number of histogram bins over the cosine range [-1, 1].
pub const HISTOGRAM_BINS: usize = 40;

/// Summary of the pairwise cosine similarities within a token subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityStats {
    pub mean: f64,
    /// Population variance (divides by the pair count).
    pub variance: f64,
    /// Counts over HISTOGRAM_BINS equal bins spanning [-1, 1]; the last
    /// bin includes the right edge.
    pub histogram: Vec<u64>,
    /// Number of unordered pairs behind the statistics.
    pub pairs: u64,
}

fn histogram_bin(c: f64) -> usize {
    let width = 2.0 / HISTOGRAM_BINS as f64;
    let idx = ((c + 1.0) / width).floor() as isize;
    idx.clamp(0, HISTOGRAM_BINS as isize - 1) as usize
}

/// Cosine statistics over all unordered row pairs drawn from `subset`.
pub fn pairwise_cosine_stats(m: &Matrix, subset: &[TokenIndex]) -> Result<SimilarityStats> {
    if subset.len() < 2 {
        return Err(Error::invalid_argument(format!(
            "need at least 2 tokens for pairwise statistics, got {}",
            subset.len()
        )));
    }
    for t in subset {
        if t.0 >= m.rows() {
            return Err(Error::invalid_argument(format!(
                "token {t} out of range for {} rows",
                m.rows()
            )));
        }
    }
    let mut cosines = Vec::with_capacity(subset.len() * (subset.len() - 1) / 2);
    for a in 0..subset.len() {
        for b in a + 1..subset.len() {
            cosines.push(cosine_similarity(m.row(subset[a].0), m.row(subset[b].0)));
        }
    }
    let count = cosines.len() as f64;
    let mut sum = 0.0f64;
    for &c in &cosines {
        sum += c;
    }
    let mean = sum / count;
    let mut sq = 0.0f64;
    for &c in &cosines {
        sq += (c - mean) * (c - mean);
    }
    let mut histogram = vec![0u64; HISTOGRAM_BINS];
    for &c in &cosines {
        histogram[histogram_bin(c)] += 1;
    }
    Ok(SimilarityStats {
        mean,
        variance: sq / count,
        histogram,
        pairs: cosines.len() as u64,
    })
}

fn mat_vec(c: &[f64], d: usize, v: &[f64]) -> Vec<f64> {
    (0..d)
        .map(|p| {
            let mut acc = 0.0f64;
            for q in 0..d {
                acc += c[p * d + q] * v[q];
            }
            acc
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    let mut acc = 0.0f64;
    for &x in v {
        acc += x * x;
    }
    acc.sqrt()
}

/// Power iteration for the dominant eigenpair of a symmetric d x d
/// matrix. Starts from normalized ones. A start lying exactly on an
/// invariant non-dominant line never converges (the iterate collapses
/// or flips sign forever), so unconverged starts fall through to the
/// canonical basis vectors; the best Rayleigh quotient seen is the
/// fallback. The start order is fixed, keeping results deterministic.
fn dominant_eigenpair(c: &[f64], d: usize) -> (f64, Vec<f64>) {
    let ones: Vec<f64> = vec![1.0 / (d as f64).sqrt(); d];
    let mut starts = vec![ones.clone()];
    for i in 0..d {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        starts.push(e);
    }
    let rayleigh = |v: &[f64]| -> f64 {
        let cv = mat_vec(c, d, v);
        let mut acc = 0.0f64;
        for i in 0..d {
            acc += v[i] * cv[i];
        }
        acc.max(0.0)
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in starts {
        let mut v = start;
        let mut converged = false;
        for _ in 0..1000 {
            let w = mat_vec(c, d, &v);
            let wn = norm(&w);
            if wn == 0.0 {
                break;
            }
            let next: Vec<f64> = w.iter().map(|x| x / wn).collect();
            let mut delta = 0.0f64;
            for i in 0..d {
                delta += (next[i] - v[i]) * (next[i] - v[i]);
            }
            v = next;
            if delta.sqrt() < 1e-10 {
                converged = true;
                break;
            }
        }
        let lambda = rayleigh(&v);
        if converged {
            return (lambda, v);
        }
        if best.as_ref().is_none_or(|(l, _)| lambda > *l) {
            best = Some((lambda, v));
        }
    }
    best.unwrap_or((0.0, ones))
}

/// Flips the direction so its largest-magnitude coordinate is positive.
fn canonical_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Projects rows onto their top two principal directions.
///
/// Returns the n x 2 coordinates and the two leading eigenvalues of the
/// sample covariance (descending). Zero-variance input produces zero
/// coordinates and zero variance rather than an error.
pub fn pca_2d(m: &Matrix) -> Result<(Matrix, [f64; 2])> {
    let n = m.rows();
    let d = m.cols();
    if n < 2 || d < 2 {
        return Err(Error::invalid_argument(format!(
            "need at least a 2x2 matrix for a 2-D projection, got {n}x{d}"
        )));
    }
    let mut means = vec![0.0f64; d];
    for i in 0..n {
        let row = m.row(i);
        for j in 0..d {
            means[j] += f64::from(row[j]);
        }
    }
    for mj in &mut means {
        *mj /= n as f64;
    }
    let mut x = vec![0.0f64; n * d];
    for i in 0..n {
        let row = m.row(i);
        for j in 0..d {
            x[i * d + j] = f64::from(row[j]) - means[j];
        }
    }
    // Sample covariance, accumulated over rows in ascending order.
    let mut cov = vec![0.0f64; d * d];
    for i in 0..n {
        for p in 0..d {
            let xp = x[i * d + p];
            for q in 0..d {
                cov[p * d + q] += xp * x[i * d + q];
            }
        }
    }
    let denom = (n - 1) as f64;
    for entry in &mut cov {
        *entry /= denom;
    }

    let (l1, mut v1) = dominant_eigenpair(&cov, d);
    let mut deflated = cov.clone();
    for p in 0..d {
        for q in 0..d {
            deflated[p * d + q] -= l1 * v1[p] * v1[q];
        }
    }
    let (l2, mut v2) = dominant_eigenpair(&deflated, d);
    canonical_sign(&mut v1);
    canonical_sign(&mut v2);

    let (mut ev, mut dirs) = ([l1, l2], [v1, v2]);
    if ev[1] > ev[0] {
        ev.swap(0, 1);
        dirs.swap(0, 1);
    }

    let mut coords = Vec::with_capacity(n * 2);
    for i in 0..n {
        for dir in &dirs {
            let mut acc = 0.0f64;
            for j in 0..d {
                acc += x[i * d + j] * dir[j];
            }
            coords.push(acc as f32);
        }
    }
    Ok((Matrix::new(n, 2, coords)?, ev))
}

/// Per-layer KV-cache shape of a transformer, for memory accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelGeometry {
    pub layers: usize,
    pub kv_heads: usize,
    pub head_dim: usize,
    pub bytes_per_element: usize,
}

impl ModelGeometry {
    pub fn new(layers: usize, kv_heads: usize, head_dim: usize, bytes_per_element: usize) -> Result<Self> {
        if layers == 0 || kv_heads == 0 || head_dim == 0 || bytes_per_element == 0 {
            return Err(Error::invalid_argument(
                "all geometry fields must be at least 1",
            ));
        }
        Ok(ModelGeometry {
            layers,
            kv_heads,
            head_dim,
            bytes_per_element,
        })
    }

    /// 8B-class grouped-query geometry in BF16: 32 layers, 8 KV heads,
    /// head dim 128, 2 bytes per element.
    #[must_use]
    pub fn bf16_8b() -> Self {
        ModelGeometry {
            layers: 32,
            kv_heads: 8,
            head_dim: 128,
            bytes_per_element: 2,
        }
    }
}

/// KV-cache size in GiB for `tokens` cached positions: keys and values
/// for every layer and KV head.
#[must_use]
pub fn kv_memory_gb(geom: &ModelGeometry, tokens: usize) -> f64 {
    let per_token = 2u64
        * geom.layers as u64
        * geom.kv_heads as u64
        * geom.head_dim as u64
        * geom.bytes_per_element as u64;
    tokens as f64 * per_token as f64 / f64::from(1u32 << 30)
}

/// Rounds to 3 decimal places with exact halves going up, which is the
/// convention the memory table is printed under. The built-in `{:.3}`
/// formatter rounds halves to even and would print 0.0625 as 0.062.
#[must_use]
pub fn round3_half_up(x: f64) -> f64 {
    (x * 1000.0 + 0.5).floor() / 1000.0
}
