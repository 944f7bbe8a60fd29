//! `graphkv evict`: run one eviction and write the kept set, the
//! gathered sub-matrices, and the refined scores.

use std::path::PathBuf;

use clap::Args;

use graphkv_core::error::Result;
use graphkv_core::eviction::{evict, EvictionPolicy};
use graphkv_core::io::{write_scores, write_tensor};

use crate::config::{load_source, read_json, RunConfig, WorkloadSource};

#[derive(Debug, Args)]
pub struct EvictArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Override: workload manifest path.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Override: token budget.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Override: protected window length.
    #[arg(long)]
    pub protected_window: Option<usize>,
    /// Override: propagation rounds.
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Override: synthetic workload seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Drop the refinement stage and keep the plain baseline top-k.
    #[arg(long)]
    pub baseline: bool,
    /// Override: output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &EvictArgs) -> Result<()> {
    let mut cfg: RunConfig = read_json(&args.config)?;
    if let Some(manifest) = &args.manifest {
        cfg.workload = WorkloadSource::Manifest(manifest.clone());
    }
    if let Some(budget) = args.budget {
        cfg.budget = budget;
    }
    if let Some(window) = args.protected_window {
        cfg.protected_window = window;
    }
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    if args.baseline {
        cfg.refine = None;
    } else if let Some(rounds) = args.rounds {
        cfg.refine.get_or_insert_with(Default::default).propagation.rounds = rounds;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = Some(out.clone());
    }

    let (cache, _labels) = load_source(&cfg.workload, cfg.seed)?;
    let policy = EvictionPolicy {
        scorer: cfg.scorer.clone(),
        refine: cfg.refine,
        protected_window: cfg.protected_window,
    };
    let result = evict(&cache, cfg.budget, &policy)?;

    let out_dir = cfg.out_dir.unwrap_or_else(|| PathBuf::from("evict_out"));
    std::fs::create_dir_all(&out_dir)?;
    let kept: Vec<usize> = result.kept_indices.iter().map(|t| t.0).collect();
    let mut kept_json = serde_json::to_string(&kept)?;
    kept_json.push('\n');
    std::fs::write(out_dir.join("kept.json"), kept_json)?;
    write_tensor(out_dir.join("keys_sub.gkt"), &result.keys_sub)?;
    write_tensor(out_dir.join("values_sub.gkt"), &result.values_sub)?;
    write_scores(out_dir.join("scores.gkt"), &result.refined_scores)?;
    println!("{}", out_dir.display());
    Ok(())
}
