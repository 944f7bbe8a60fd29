//! JSON run configurations for the `evict` and `sweep` commands.
//! Unknown keys are rejected at every level; command-line flags override
//! whatever the file says.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use graphkv_core::error::Result;
use graphkv_core::eviction::RefineConfig;
use graphkv_core::graph::SimilarityKind;
use graphkv_core::propagation::SignalKind;
use graphkv_core::scorers::ScorerKind;
use graphkv_core::synthetic::{gen_clustered_keys, ClusterSpec};
use graphkv_core::tensor::LayerCache;

/// Where the cache tensors for a run come from: a saved workload
/// manifest or an inline synthetic spec.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum WorkloadSource {
    Manifest(PathBuf),
    Synthetic(ClusterSpec),
}

/// Resolves a workload source into tensors plus labels when available.
/// `seed_override` replaces a synthetic spec's seed.
pub fn load_source(
    src: &WorkloadSource,
    seed_override: Option<u64>,
) -> Result<(LayerCache, Option<Vec<usize>>)> {
    match src {
        WorkloadSource::Manifest(path) => {
            let loaded = graphkv_core::io::load_workload(path)?;
            Ok((loaded.cache, loaded.labels))
        }
        WorkloadSource::Synthetic(spec) => {
            let mut spec = spec.clone();
            if let Some(seed) = seed_override {
                spec.seed = seed;
            }
            let w = gen_clustered_keys(&spec)?;
            Ok((w.cache, Some(w.labels)))
        }
    }
}

/// Configuration for a single eviction run.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub workload: WorkloadSource,
    pub budget: usize,
    pub scorer: ScorerKind,
    #[serde(default)]
    pub refine: Option<RefineConfig>,
    #[serde(default)]
    pub protected_window: usize,
    /// Replaces the synthetic workload seed when present.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

/// Configuration for a parameter sweep. One eviction run per cell of
/// the cartesian grid; rows are emitted in nested order with `ratios`
/// outermost and `budgets` innermost.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub workload: WorkloadSource,
    pub scorer: ScorerKind,
    #[serde(default)]
    pub protected_window: usize,
    #[serde(default = "default_strength")]
    pub decay_strength: f64,
    #[serde(default)]
    pub seed: Option<u64>,
    pub ratios: Vec<f64>,
    pub ms: Vec<usize>,
    pub rounds: Vec<usize>,
    pub signals: Vec<SignalKind>,
    pub kinds: Vec<SimilarityKind>,
    pub budgets: Vec<usize>,
}

fn default_strength() -> f64 {
    1.0
}

/// Reads and parses a JSON config file.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
