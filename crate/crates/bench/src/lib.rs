//! Shared fixtures for the criterion benchmarks.

use graphkv_core::tensor::{LayerCache, Matrix, ScoreVector};
use graphkv_core::SplitMix64;

/// A seeded gaussian cache with `n` tokens of dimension `d`, including
/// `n` query rows so every similarity kind is benchable.
pub fn seeded_cache(seed: u64, n: usize, d: usize) -> LayerCache {
    let mut rng = SplitMix64::new(seed);
    let mut mat = |rows: usize| {
        Matrix::from_rows(
            (0..rows)
                .map(|_| (0..d).map(|_| rng.next_gaussian() as f32).collect())
                .collect(),
        )
        .expect("gaussian rows are finite")
    };
    let keys = mat(n);
    let values = mat(n);
    let queries = mat(n);
    LayerCache::new(keys, values, Some(queries)).expect("shapes agree")
}

/// Uniform scores in [0, 1) for `n` tokens.
pub fn seeded_scores(seed: u64, n: usize) -> ScoreVector {
    let mut rng = SplitMix64::new(seed);
    ScoreVector::new((0..n).map(|_| rng.next_f64()).collect()).expect("finite scores")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_deterministic() {
        let a = seeded_cache(5, 16, 8);
        let b = seeded_cache(5, 16, 8);
        assert_eq!(a.keys.data(), b.keys.data());
        assert_eq!(seeded_scores(5, 16).as_slice(), seeded_scores(5, 16).as_slice());
    }
}
