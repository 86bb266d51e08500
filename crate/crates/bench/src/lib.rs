//! Fixed inputs shared by the benchmarks.

use steklov_core::{normalize, random_weight, WeightFunction};

/// `1 + ½cos 2θ`, normalized.
pub fn cosine_weight() -> WeightFunction {
    normalize(&WeightFunction::cosine(0.5, 2).expect("positive weight")).expect("normalizable weight")
}

/// A random weight of order `m` with the scan parameters.
pub fn scan_weight(seed: u64, m: usize) -> WeightFunction {
    random_weight(seed, m, 0.2, 0.5).expect("random weight")
}
