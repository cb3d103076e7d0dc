//! Deterministic seed derivation.
//!
//! Every random decision in the crate flows from a user seed through
//! `mix_seed`, so results are reproducible regardless of how work is
//! scheduled across threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit mix of a master seed and a stream index.
pub fn mix_seed(master: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(master) ^ stream.wrapping_mul(0xA24B_AED4_963E_E407))
}

/// Seeded generator used throughout the crate. ChaCha8 keeps streams stable
/// across platforms and releases.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix_is_deterministic_and_spreads() {
        assert_eq!(mix_seed(7, 3), mix_seed(7, 3));
        assert_ne!(mix_seed(7, 3), mix_seed(7, 4));
        assert_ne!(mix_seed(7, 3), mix_seed(8, 3));
        // adjacent streams should not collide for small masters
        let seeds: Vec<u64> = (0..1000).map(|t| mix_seed(42, t)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), seeds.len());
    }
}
