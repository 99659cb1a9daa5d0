//! Seed derivation for independent, reproducible random streams.

/// SplitMix64 scrambler.
pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the sub-stream `(lane, slot)` of a root seed. Distinct pairs
/// get statistically independent streams, so work items can be evaluated
/// in any order without changing results.
pub(crate) fn stream_seed(seed: u64, lane: u64, slot: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ lane).wrapping_add(slot))
}
