//! `graphkv memcalc`: KV-cache memory table for a model geometry.

use clap::Args;

use graphkv_core::analysis::{kv_memory_gb, round3_half_up, ModelGeometry};
use graphkv_core::error::Result;

#[derive(Debug, Args)]
pub struct MemcalcArgs {
    /// Comma-separated context lengths, e.g. 128,512,128000.
    #[arg(long, value_delimiter = ',', required = true)]
    pub tokens: Vec<usize>,
    /// Transformer layer count.
    #[arg(long, default_value_t = 32)]
    pub layers: usize,
    /// KV heads per layer (grouped-query attention).
    #[arg(long, default_value_t = 8)]
    pub kv_heads: usize,
    /// Per-head dimension.
    #[arg(long, default_value_t = 128)]
    pub head_dim: usize,
    /// Bytes per element (2 for bf16/fp16).
    #[arg(long, default_value_t = 2)]
    pub bytes: usize,
}

pub fn run(args: &MemcalcArgs) -> Result<()> {
    let geom = ModelGeometry::new(args.layers, args.kv_heads, args.head_dim, args.bytes)?;
    println!("tokens,memory_gb");
    for &tokens in &args.tokens {
        let gb = round3_half_up(kv_memory_gb(&geom, tokens));
        println!("{tokens},{gb:.3}");
    }
    Ok(())
}
