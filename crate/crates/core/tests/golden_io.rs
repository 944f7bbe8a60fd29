//! Golden-file checks for the GKT1 tensor format. The committed fixtures in
//! tests/golden/ freeze the byte layout; if encoding drifts, these fail.

use graphkv_core::io::{
    decode_scores, decode_tensor, encode_scores, encode_tensor, read_tensor, write_tensor,
};
use graphkv_core::tensor::{Matrix, ScoreVector};
use graphkv_core::SplitMix64;

fn golden_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn golden_bytes(name: &str) -> Vec<u8> {
    std::fs::read(golden_path(name)).unwrap_or_else(|e| panic!("missing fixture {name}: {e}"))
}

/// The fixture tensors, regenerable from the seeded RNG alone.
fn expected_empty() -> Matrix {
    Matrix::zeros(0, 0)
}

fn expected_ramp() -> Matrix {
    Matrix::from_rows(
        (0..4)
            .map(|i| (0..3).map(|j| (i * 3 + j) as f32 * 0.25 - 1.0).collect())
            .collect(),
    )
    .unwrap()
}

fn expected_gauss() -> Matrix {
    let mut rng = SplitMix64::new(9);
    Matrix::from_rows(
        (0..5)
            .map(|_| (0..4).map(|_| rng.next_gaussian() as f32).collect())
            .collect(),
    )
    .unwrap()
}

fn expected_scores() -> ScoreVector {
    ScoreVector::new(vec![1.5, f64::NEG_INFINITY, 0.25, -0.0, 3.75, -2.5]).unwrap()
}

#[test]
fn committed_goldens_decode_and_reencode_exactly() {
    for (name, expected) in [
        ("empty_0x0.gkt", expected_empty()),
        ("ramp_4x3.gkt", expected_ramp()),
        ("gauss_5x4_seed9.gkt", expected_gauss()),
    ] {
        let bytes = golden_bytes(name);
        let decoded = decode_tensor(&bytes).unwrap();
        assert_eq!(decoded.rows(), expected.rows(), "{name}");
        assert_eq!(decoded.cols(), expected.cols(), "{name}");
        for (a, b) in decoded.data().iter().zip(expected.data().iter()) {
            assert_eq!(a.to_bits(), b.to_bits(), "{name}");
        }
        assert_eq!(encode_tensor(&expected), bytes, "{name} re-encode");
    }
}

#[test]
fn committed_score_golden_preserves_negative_infinity() {
    let bytes = golden_bytes("scores_neginf_1x6.gkt");
    let decoded = decode_scores(&bytes).unwrap();
    let expected = expected_scores();
    assert_eq!(decoded.len(), expected.len());
    for i in 0..decoded.len() {
        let (a, b) = (decoded.get(i), expected.get(i));
        if a == f64::NEG_INFINITY {
            assert_eq!(b, f64::NEG_INFINITY);
        } else {
            assert_eq!(a as f32, b as f32);
        }
    }
    assert_eq!(encode_scores(&expected), bytes, "re-encode");
}

#[test]
fn empty_golden_is_header_only() {
    assert_eq!(golden_bytes("empty_0x0.gkt").len(), 28);
}

#[test]
fn seeded_tensors_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = SplitMix64::new(77);
    for case in 0..20u32 {
        let rows = (rng.next_u64() % 7) as usize;
        let cols = 1 + (rng.next_u64() % 9) as usize;
        let m = Matrix::from_rows(
            (0..rows)
                .map(|_| (0..cols).map(|_| rng.next_gaussian() as f32).collect())
                .collect::<Vec<_>>(),
        )
        .unwrap_or_else(|_| Matrix::zeros(0, cols));
        let path = dir.path().join(format!("t{case}.gkt"));
        write_tensor(&path, &m).unwrap();
        let back = read_tensor(&path).unwrap();
        assert_eq!(back.rows(), m.rows());
        assert_eq!(back.cols(), m.cols());
        for (a, b) in back.data().iter().zip(m.data().iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

// Writes the fixtures. Run once, inspect, commit:
// cargo test -p graphkv-core --test golden_io -- --ignored regenerate
#[test]
#[ignore]
fn regenerate_golden_files() {
    let dir = golden_path("");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(golden_path("empty_0x0.gkt"), encode_tensor(&expected_empty())).unwrap();
    std::fs::write(golden_path("ramp_4x3.gkt"), encode_tensor(&expected_ramp())).unwrap();
    std::fs::write(golden_path("gauss_5x4_seed9.gkt"), encode_tensor(&expected_gauss())).unwrap();
    std::fs::write(golden_path("scores_neginf_1x6.gkt"), encode_scores(&expected_scores())).unwrap();
}
