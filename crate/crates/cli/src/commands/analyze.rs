//! `graphkv analyze`: similarity statistics, histogram, coverage, and a
//! 2-D PCA projection for a kept subset of a workload.

use std::path::PathBuf;

use clap::Args;

use graphkv_core::analysis::{pairwise_cosine_stats, pca_2d, HISTOGRAM_BINS};
use graphkv_core::error::{Error, Result};
use graphkv_core::io::load_workload;
use graphkv_core::synthetic::cluster_coverage;
use graphkv_core::tensor::TokenIndex;

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Workload manifest to read tensors from.
    #[arg(long)]
    pub manifest: PathBuf,
    /// JSON array of kept token indices; all tokens when omitted.
    #[arg(long)]
    pub kept: Option<PathBuf>,
    /// Output directory for CSV files.
    #[arg(long, default_value = "analysis")]
    pub out: PathBuf,
}

pub fn run(args: &AnalyzeArgs) -> Result<()> {
    let loaded = load_workload(&args.manifest)?;
    let n = loaded.cache.token_count();
    let kept: Vec<TokenIndex> = match &args.kept {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let raw: Vec<usize> = serde_json::from_str(&text)?;
            for &i in &raw {
                if i >= n {
                    return Err(Error::invalid_argument(format!(
                        "kept index {i} out of range for {n} tokens"
                    )));
                }
            }
            raw.into_iter().map(TokenIndex).collect()
        }
        None => (0..n).map(TokenIndex).collect(),
    };

    let stats = pairwise_cosine_stats(&loaded.cache.keys, &kept)?;
    let coverage = loaded
        .labels
        .as_ref()
        .map(|labels| cluster_coverage(&kept, labels));

    std::fs::create_dir_all(&args.out)?;

    let coverage_cell = coverage.map(|c| c.to_string()).unwrap_or_default();
    let stats_csv = format!(
        "mean,variance,pairs,coverage\n{},{},{},{}\n",
        stats.mean, stats.variance, stats.pairs, coverage_cell
    );
    std::fs::write(args.out.join("stats.csv"), stats_csv)?;

    let mut hist_csv = String::from("bin_lo,bin_hi,count\n");
    let width = 2.0 / HISTOGRAM_BINS as f64;
    for (bin, count) in stats.histogram.iter().enumerate() {
        let lo = -1.0 + bin as f64 * width;
        hist_csv.push_str(&format!("{:.2},{:.2},{}\n", lo, lo + width, count));
    }
    std::fs::write(args.out.join("histogram.csv"), hist_csv)?;

    let mut pca_csv = String::from("x,y\n");
    if kept.len() >= 2 && loaded.cache.dim() >= 2 {
        let rows: Vec<usize> = kept.iter().map(|t| t.0).collect();
        let subset = loaded.cache.keys.select_rows(&rows)?;
        let (coords, _eigenvalues) = pca_2d(&subset)?;
        for i in 0..coords.rows() {
            let row = coords.row(i);
            pca_csv.push_str(&format!("{},{}\n", row[0], row[1]));
        }
    }
    std::fs::write(args.out.join("pca.csv"), pca_csv)?;

    println!("{}", args.out.display());
    Ok(())
}
