pub mod analyze;
pub mod evict;
pub mod memcalc;
pub mod sweep;
pub mod synth;
