//! Dense row-major matrices, per-layer cache views, and score vectors.
//!
//! Key/value/query payloads are carried as f32, matching on-disk storage.
//! All similarity and attention arithmetic accumulates in f64, always
//! iterating coordinates in ascending order, so results are reproducible
//! bit for bit regardless of thread count or build flags.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Position of a token within a layer cache.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenIndex(pub usize);

impl std::fmt::Display for TokenIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Dense f32 matrix, row-major. Every element is finite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl Matrix {
    /// Builds a matrix from a flat row-major buffer.
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::invalid_argument("matrix dimension product overflows"))?;
        if data.len() != expected {
            return Err(Error::invalid_argument(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        if let Some(idx) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid_argument(format!(
                "non-finite matrix element at flat index {idx}"
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    #[must_use]
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from nested rows, validating rectangular shape.
    pub fn from_rows(rows: Vec<Vec<f32>>) -> Result<Self> {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::invalid_argument(format!(
                    "row {i} has length {}, expected {cols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Matrix::new(n, cols, data)
    }

    #[must_use]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[must_use]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[must_use]
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Row `i` as a contiguous slice. Panics if out of range.
    #[must_use]
    pub fn row(&self, i: usize) -> &[f32] {
        assert!(i < self.rows, "row {i} out of range for {} rows", self.rows);
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Copies the listed rows, in the given order, into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::invalid_argument(format!(
                    "row index {i} out of range for {} rows",
                    self.rows
                )));
            }
            data.extend_from_slice(self.row(i));
        }
        Ok(Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        })
    }

    /// The first `n` rows as a new matrix.
    pub fn head_rows(&self, n: usize) -> Result<Self> {
        if n > self.rows {
            return Err(Error::invalid_argument(format!(
                "cannot take {n} rows from a {}-row matrix",
                self.rows
            )));
        }
        Ok(Matrix {
            rows: n,
            cols: self.cols,
            data: self.data[..n * self.cols].to_vec(),
        })
    }
}

/// Keys, values, and optionally queries for one attention layer.
///
/// Keys and values must agree in both dimensions; queries, when present,
/// must share the key dimensionality but may have any row count.
#[derive(Debug, Clone)]
pub struct LayerCache {
    pub keys: Matrix,
    pub values: Matrix,
    pub queries: Option<Matrix>,
}

impl LayerCache {
    pub fn new(keys: Matrix, values: Matrix, queries: Option<Matrix>) -> Result<Self> {
        if values.rows() != keys.rows() || values.cols() != keys.cols() {
            return Err(Error::invalid_argument(format!(
                "values are {}x{}, keys are {}x{}",
                values.rows(),
                values.cols(),
                keys.rows(),
                keys.cols()
            )));
        }
        if let Some(q) = &queries {
            if q.cols() != keys.cols() {
                return Err(Error::invalid_argument(format!(
                    "queries have dimension {}, keys have {}",
                    q.cols(),
                    keys.cols()
                )));
            }
        }
        Ok(LayerCache {
            keys,
            values,
            queries,
        })
    }

    /// Number of cached tokens.
    #[must_use]
    pub fn token_count(&self) -> usize {
        self.keys.rows()
    }

    /// Head dimensionality.
    #[must_use]
    pub fn dim(&self) -> usize {
        self.keys.cols()
    }

    /// A view of the first `n` tokens. Queries are truncated to at most
    /// `n` rows so position pairing stays valid in the sub-problem.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        let keys = self.keys.head_rows(n)?;
        let values = self.values.head_rows(n)?;
        let queries = match &self.queries {
            Some(q) => Some(q.head_rows(q.rows().min(n))?),
            None => None,
        };
        Ok(LayerCache {
            keys,
            values,
            queries,
        })
    }
}

/// Per-token importance scores.
///
/// Negative infinity is a legal score (it marks evicted tokens); NaN and
/// positive infinity are rejected so ordering comparisons stay total.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    values: Vec<f64>,
}

impl ScoreVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (i, v) in values.iter().enumerate() {
            if v.is_nan() || *v == f64::INFINITY {
                return Err(Error::invalid_argument(format!(
                    "score {i} is {v}; only finite values and -inf are allowed"
                )));
            }
        }
        Ok(ScoreVector { values })
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[must_use]
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    #[must_use]
    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    #[must_use]
    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }
}

/// Dot product with f64 accumulation in ascending coordinate order.
#[must_use]
pub fn dot_f64(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0f64;
    for i in 0..a.len() {
        acc += f64::from(a[i]) * f64::from(b[i]);
    }
    acc
}

/// Euclidean norm of one row, accumulated in f64.
#[must_use]
pub fn l2_norm(row: &[f32]) -> f64 {
    let mut acc = 0.0f64;
    for &v in row {
        let v = f64::from(v);
        acc += v * v;
    }
    acc.sqrt()
}

/// Euclidean norm of every row of `m`.
#[must_use]
pub fn l2_norm_rows(m: &Matrix) -> Vec<f64> {
    (0..m.rows()).map(|i| l2_norm(m.row(i))).collect()
}

/// Cosine similarity in f64. Returns 0 when either vector has zero norm,
/// so padding rows never produce spurious edges. The quotient is clamped
/// to [-1, 1]: rounding can push it a few ulps past the mathematical
/// range for near-parallel vectors.
#[must_use]
pub fn cosine_similarity(a: &[f32], b: &[f32]) -> f64 {
    let na = l2_norm(a);
    let nb = l2_norm(b);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot_f64(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

/// Numerically stable softmax over one row of logits.
#[must_use]
pub fn softmax_row(logits: &[f64]) -> Vec<f64> {
    if logits.is_empty() {
        return Vec::new();
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let mut sum = 0.0f64;
    for &e in &exps {
        sum += e;
    }
    exps.into_iter().map(|e| e / sum).collect()
}
