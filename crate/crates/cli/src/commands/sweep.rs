//! `graphkv sweep`: run an eviction per grid cell and emit one CSV row
//! each, in deterministic nested grid order.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use graphkv_core::analysis::pairwise_cosine_stats;
use graphkv_core::error::{Error, Result};
use graphkv_core::eviction::{evict, EvictionPolicy, RefineConfig};
use graphkv_core::graph::SourceSelection;
use graphkv_core::propagation::{NeighborPolicy, PropagationConfig};
use graphkv_core::synthetic::cluster_coverage;

use crate::config::{load_source, read_json, SweepConfig};

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// JSON sweep configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Override: synthetic workload seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV path.
    #[arg(long, default_value = "sweep.csv")]
    pub out: PathBuf,
}

/// The serde name of a unit enum variant, used for CSV cells.
fn variant_name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        other => panic!("expected a string-serializing enum, got {other:?}"),
    }
}

pub fn run(args: &SweepArgs) -> Result<()> {
    let mut cfg: SweepConfig = read_json(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    for (name, len) in [
        ("ratios", cfg.ratios.len()),
        ("ms", cfg.ms.len()),
        ("rounds", cfg.rounds.len()),
        ("signals", cfg.signals.len()),
        ("kinds", cfg.kinds.len()),
        ("budgets", cfg.budgets.len()),
    ] {
        if len == 0 {
            return Err(Error::config(format!("sweep grid list `{name}` is empty")));
        }
    }

    let (cache, labels) = load_source(&cfg.workload, cfg.seed)?;
    let n = cache.token_count();

    let mut csv =
        String::from("ratio,m,rounds,signal,kind,budget,k_sources,kept,coverage,mean_cos,var_cos\n");
    for &ratio in &cfg.ratios {
        for &m in &cfg.ms {
            for &rounds in &cfg.rounds {
                for &signal in &cfg.signals {
                    for &kind in &cfg.kinds {
                        for &budget in &cfg.budgets {
                            let source = SourceSelection::Ratio(ratio);
                            let policy = EvictionPolicy {
                                scorer: cfg.scorer.clone(),
                                refine: Some(RefineConfig {
                                    source,
                                    kind,
                                    propagation: PropagationConfig {
                                        rounds,
                                        neighbors: NeighborPolicy::Fixed(m),
                                        signal,
                                        decay_strength: cfg.decay_strength,
                                    },
                                }),
                                protected_window: cfg.protected_window,
                            };
                            let result = evict(&cache, budget, &policy)?;
                            let head_n = n - cfg.protected_window;
                            let k_sources = source.resolve(head_n, budget)?;
                            let coverage = labels
                                .as_ref()
                                .map(|l| cluster_coverage(&result.kept_indices, l).to_string())
                                .unwrap_or_default();
                            let (mean, var) = if result.kept_indices.len() >= 2 {
                                let s =
                                    pairwise_cosine_stats(&cache.keys, &result.kept_indices)?;
                                (s.mean.to_string(), s.variance.to_string())
                            } else {
                                (String::new(), String::new())
                            };
                            csv.push_str(&format!(
                                "{},{},{},{},{},{},{},{},{},{},{}\n",
                                ratio,
                                m,
                                rounds,
                                variant_name(&signal),
                                variant_name(&kind),
                                budget,
                                k_sources,
                                result.kept_indices.len(),
                                coverage,
                                mean,
                                var
                            ));
                        }
                    }
                }
            }
        }
    }
    std::fs::write(&args.out, csv)?;
    println!("{}", args.out.display());
    Ok(())
}
