//! Deterministic seed derivation for replicate streams.
//!
//! Monte Carlo runs are specified by a single master seed. Each replicate
//! draws from its own RNG seeded by `derive_seed(master, stream, index)`, so
//! curves are reproducible row by row and replicates can be distributed
//! across workers in any order.

/// SplitMix64 finalizer: a bijective 64-bit mixer.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replicate `index` of stream `stream` under `master`.
///
/// `stream` distinguishes parameter cells (a sample size, a dithering index)
/// so that replicates of different cells are decorrelated even at equal
/// indices.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix(splitmix(splitmix(master) ^ stream) ^ index)
}
