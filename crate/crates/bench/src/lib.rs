//! Shared fixtures for the benchmarks under `benches/`.
//!
//! Run with `cargo bench -p pureid-bench`.

use pureid_core::montecarlo::sample_references;
use pureid_core::StateVector;

/// Local dimension pairs benchmarked, smallest first.
pub const DIMENSIONS: [(usize, usize); 3] = [(2, 1), (2, 2), (2, 3)];

/// `count` reproducible Haar reference pairs in dimension `d`.
pub fn reference_pairs(d: usize, count: usize) -> Vec<(StateVector, StateVector)> {
    (0..count as u64)
        .map(|i| sample_references(d, 0xbe_4c, i))
        .collect()
}
