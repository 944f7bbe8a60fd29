//! Deterministic random number generation for synthetic workloads.
//!
//! SplitMix64 with polar Box-Muller gaussians. The generator is fully
//! specified here (constants, output mapping, variate consumption order)
//! so that a given seed produces the same workload on every platform and
//! in every future release. Reference outputs live in `docs/rng.md` and
//! are frozen by the tests below.

/// SplitMix64 generator.
///
/// State advances by the 64-bit golden gamma; output is the finalizer
/// from Steele, Lea and Flood's original description.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
    /// Cached second gaussian from the last polar sample, if any.
    spare: Option<f64>,
}

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX2: u64 = 0x94D0_49BB_1331_11EB;

impl SplitMix64 {
    #[must_use]
    pub fn new(seed: u64) -> Self {
        SplitMix64 {
            state: seed,
            spare: None,
        }
    }

    /// Next raw 64-bit output.
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(MIX1);
        z = (z ^ (z >> 27)).wrapping_mul(MIX2);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1): the top 53 bits scaled by 2^-53.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via the polar (Marsaglia) method.
    ///
    /// Each accepted polar iteration consumes exactly two uniforms and
    /// yields two gaussians; the second is cached and returned by the
    /// next call without touching the underlying stream. Rejected
    /// iterations also consume two uniforms. This consumption order is
    /// part of the format: reordering it would change every seeded
    /// workload.
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(g) = self.spare.take() {
            return g;
        }
        loop {
            let u = 2.0 * self.next_f64() - 1.0;
            let v = 2.0 * self.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * factor);
                return u * factor;
            }
        }
    }

    /// Drop any cached gaussian so the next draw starts a fresh polar
    /// iteration. Used at section boundaries in workload generation so
    /// that each section's stream depends only on the raw u64 position.
    pub fn clear_spare(&mut self) {
        self.spare = None;
    }
}
