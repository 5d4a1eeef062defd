//! Deterministic seed derivation: every piece of randomness in a run flows
//! from one root seed split per task, so campaigns are reproducible.

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed for sub-task `stream` of a computation rooted at `root`.
pub fn split_seed(root: u64, stream: u64) -> u64 {
    mix(mix(root) ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}
