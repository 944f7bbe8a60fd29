//! Bit-exact file formats: the GKT1 binary tensor container and the
//! JSON workload manifest. The byte layout is documented in
//! docs/tensor-format.md and frozen by golden files.
//!
//! Layout, all little-endian: magic "GKT1", version u32 (= 1), ndim u32
//! (= 2), then ndim u64 dims, then rows*cols f32 payload, row-major.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{LayerCache, Matrix, ScoreVector};

pub const MAGIC: [u8; 4] = *b"GKT1";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 28;
/// Element-count ceiling checked before any allocation.
const MAX_ELEMENTS: u128 = 1 << 40;

fn encode_raw(rows: u64, cols: u64, payload: impl Iterator<Item = f32>, count: usize) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(HEADER_LEN + count * 4);
    bytes.extend_from_slice(&MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&2u32.to_le_bytes());
    bytes.extend_from_slice(&rows.to_le_bytes());
    bytes.extend_from_slice(&cols.to_le_bytes());
    for v in payload {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

fn decode_raw(bytes: &[u8]) -> Result<(usize, usize, Vec<f32>)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedPayload {
            expected: HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    let magic = [bytes[0], bytes[1], bytes[2], bytes[3]];
    if magic != MAGIC {
        return Err(Error::BadMagic { found: magic });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::UnsupportedVersion { found: version });
    }
    let ndim = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if ndim != 2 {
        return Err(Error::UnsupportedRank { found: ndim });
    }
    let rows = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let cols = u64::from_le_bytes(bytes[20..28].try_into().unwrap());
    let elements = rows as u128 * cols as u128;
    if elements > MAX_ELEMENTS {
        return Err(Error::OversizedTensor { elements });
    }
    let expected = HEADER_LEN as u64 + elements as u64 * 4;
    let actual = bytes.len() as u64;
    if actual < expected {
        return Err(Error::TruncatedPayload { expected, actual });
    }
    if actual > expected {
        return Err(Error::TrailingBytes {
            extra: actual - expected,
        });
    }
    let payload: Vec<f32> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((rows as usize, cols as usize, payload))
}

/// Serializes a matrix to GKT1 bytes.
#[must_use]
pub fn encode_tensor(m: &Matrix) -> Vec<u8> {
    encode_raw(
        m.rows() as u64,
        m.cols() as u64,
        m.data().iter().copied(),
        m.data().len(),
    )
}

/// Parses GKT1 bytes into a matrix, rejecting non-finite payloads.
pub fn decode_tensor(bytes: &[u8]) -> Result<Matrix> {
    let (rows, cols, payload) = decode_raw(bytes)?;
    if let Some(index) = payload.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinitePayload { index });
    }
    Matrix::new(rows, cols, payload)
}

pub fn write_tensor(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    fs::write(path, encode_tensor(m))?;
    Ok(())
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Matrix> {
    decode_tensor(&fs::read(path)?)
}

/// Serializes scores as a 1 x n tensor. Values are narrowed to f32;
/// negative infinity is preserved.
#[must_use]
pub fn encode_scores(scores: &ScoreVector) -> Vec<u8> {
    encode_raw(
        1,
        scores.len() as u64,
        scores.as_slice().iter().map(|&v| v as f32),
        scores.len(),
    )
}

/// Reads a 1 x n score tensor, widening to f64. Negative infinity is a
/// legal score; NaN and positive infinity are not.
pub fn decode_scores(bytes: &[u8]) -> Result<ScoreVector> {
    let (rows, cols, payload) = decode_raw(bytes)?;
    if rows != 1 {
        return Err(Error::invalid_argument(format!(
            "score tensors are 1 x n, found {rows} x {cols}"
        )));
    }
    if let Some(index) = payload
        .iter()
        .position(|v| v.is_nan() || *v == f32::INFINITY)
    {
        return Err(Error::NonFinitePayload { index });
    }
    ScoreVector::new(payload.into_iter().map(f64::from).collect())
}

pub fn write_scores(path: impl AsRef<Path>, scores: &ScoreVector) -> Result<()> {
    fs::write(path, encode_scores(scores))?;
    Ok(())
}

pub fn read_scores(path: impl AsRef<Path>) -> Result<ScoreVector> {
    decode_scores(&fs::read(path)?)
}

/// JSON sidecar tying a workload's tensor files together. Paths are
/// resolved relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadManifest {
    pub keys: PathBuf,
    pub values: PathBuf,
    #[serde(default)]
    pub queries: Option<PathBuf>,
    #[serde(default)]
    pub labels: Option<Vec<usize>>,
    #[serde(default)]
    pub spec: Option<serde_json::Value>,
}

/// A workload loaded back from disk.
#[derive(Debug, Clone)]
pub struct LoadedWorkload {
    pub cache: LayerCache,
    pub labels: Option<Vec<usize>>,
    pub spec: Option<serde_json::Value>,
}

/// Reads a manifest and the tensors it references.
pub fn load_workload(manifest_path: impl AsRef<Path>) -> Result<LoadedWorkload> {
    let manifest_path = manifest_path.as_ref();
    let text = fs::read_to_string(manifest_path)?;
    let manifest: WorkloadManifest = serde_json::from_str(&text)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    let keys = read_tensor(base.join(&manifest.keys))?;
    let values = read_tensor(base.join(&manifest.values))?;
    let queries = match &manifest.queries {
        Some(p) => Some(read_tensor(base.join(p))?),
        None => None,
    };
    if let Some(labels) = &manifest.labels {
        if labels.len() != keys.rows() {
            return Err(Error::Manifest(format!(
                "{} labels for {} key rows",
                labels.len(),
                keys.rows()
            )));
        }
    }
    Ok(LoadedWorkload {
        cache: LayerCache::new(keys, values, queries)?,
        labels: manifest.labels,
        spec: manifest.spec,
    })
}

/// Writes cache tensors plus a manifest into `dir` and returns the
/// manifest path. File names are fixed so identical workloads produce
/// byte-identical directories.
pub fn save_workload(
    dir: impl AsRef<Path>,
    cache: &LayerCache,
    labels: Option<&[usize]>,
    spec: Option<&serde_json::Value>,
) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    write_tensor(dir.join("keys.gkt"), &cache.keys)?;
    write_tensor(dir.join("values.gkt"), &cache.values)?;
    let queries = match &cache.queries {
        Some(q) => {
            write_tensor(dir.join("queries.gkt"), q)?;
            Some(PathBuf::from("queries.gkt"))
        }
        None => None,
    };
    let manifest = WorkloadManifest {
        keys: PathBuf::from("keys.gkt"),
        values: PathBuf::from("values.gkt"),
        queries,
        labels: labels.map(<[usize]>::to_vec),
        spec: spec.cloned(),
    };
    let manifest_path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&manifest_path, text)?;
    Ok(manifest_path)
}
