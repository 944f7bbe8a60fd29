//! Graph-based refinement of token importance scores for KV-cache
//! eviction.
//!
//! A baseline scorer ranks cached tokens, the highest-ranked become
//! source nodes of a sparse cosine-similarity graph, and a few rounds of
//! decay propagation suppress tokens that are near-duplicates of a
//! source. Evicting by the refined scores keeps a budgeted subset that
//! stays important *and* diverse.
//!
//! Modules:
//! - [`tensor`]: dense matrices, layer caches, score vectors
//! - [`scorers`]: baseline importance scorers and budget allocators
//! - [`graph`]: source selection and sparse similarity graph
//! - [`propagation`]: decay/enhance/evict signal propagation
//! - [`eviction`]: budgeted token selection
//! - [`analysis`]: similarity statistics, PCA, memory model
//! - [`synthetic`]: seeded clustered workload generator
//! - [`io`]: GKT1 tensor files and workload manifests
//! - [`oracle`]: dense brute-force references for tests

pub mod analysis;
pub mod error;
pub mod eviction;
pub mod graph;
pub mod io;
pub mod oracle;
pub mod propagation;
pub mod rng;
pub mod scorers;
pub mod synthetic;
pub mod tensor;

pub use analysis::{
    kv_memory_gb, pairwise_cosine_stats, pca_2d, round3_half_up, ModelGeometry, SimilarityStats,
};
pub use error::{Error, Result};
pub use eviction::{evict, gather, select_topk, EvictionPolicy, EvictionResult, RefineConfig};
pub use graph::{
    build_sparse_graph, select_source_nodes, SimilarityKind, SourceSelection, SparseGraph,
};
pub use propagation::{
    propagate, refine_scores, NeighborPolicy, PropagationConfig, SignalKind, MAX_ROUNDS,
};
pub use rng::SplitMix64;
pub use scorers::{
    allocate_budget_pyramid, allocate_budget_uniform, compute_scores, score_cumulative_attention,
    score_knorm, score_window_attention, ScorerKind, WindowConfig,
};
pub use synthetic::{cluster_coverage, gen_clustered_keys, ClusterSpec, ClusterWorkload};
pub use tensor::{
    cosine_similarity, dot_f64, l2_norm, l2_norm_rows, softmax_row, LayerCache, Matrix,
    ScoreVector, TokenIndex,
};
