//! `graphkv synth`: generate a clustered synthetic workload on disk.

use std::path::PathBuf;

use clap::Args;

use graphkv_core::error::Result;
use graphkv_core::io::save_workload;
use graphkv_core::synthetic::{gen_clustered_keys, ClusterSpec};

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// RNG seed; identical seeds give byte-identical workloads.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of clusters.
    #[arg(long, default_value_t = 4)]
    pub clusters: usize,
    /// Tokens per cluster.
    #[arg(long, default_value_t = 16)]
    pub per_cluster: usize,
    /// Embedding dimension.
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    /// Per-coordinate noise level around each cluster center.
    #[arg(long, default_value_t = 0.05)]
    pub sigma: f64,
    /// Number of query rows to generate.
    #[arg(long, default_value_t = 16)]
    pub query_count: usize,
    /// Comma-separated cluster weights for query sampling
    /// (e.g. 0.8,0.05,0.05,0.05,0.05); empty means uniform.
    #[arg(long, value_delimiter = ',')]
    pub focus: Vec<f64>,
    /// Output directory for tensors and manifest.
    #[arg(long, default_value = "workload")]
    pub out: PathBuf,
}

pub fn run(args: &SynthArgs) -> Result<()> {
    let spec = ClusterSpec {
        seed: args.seed,
        clusters: args.clusters,
        per_cluster: args.per_cluster,
        dim: args.dim,
        sigma: args.sigma,
        query_count: args.query_count,
        query_focus: args.focus.clone(),
    };
    let w = gen_clustered_keys(&spec)?;
    let spec_json = serde_json::to_value(&w.spec)?;
    let manifest = save_workload(&args.out, &w.cache, Some(&w.labels), Some(&spec_json))?;
    println!("{}", manifest.display());
    Ok(())
}
