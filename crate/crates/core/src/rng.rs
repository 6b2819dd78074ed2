//! Seed derivation.
//!
//! Every random choice in the crate is a pure function of a user seed and a
//! small tuple of labels, so sequential, parallel and merged runs agree.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One round of the SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a sequence of labels.
pub fn derive(seed: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(mix64(seed), |acc, &l| mix64(acc ^ mix64(l.wrapping_add(0x5851_f42d_4c95_7f2d))))
}

/// A ChaCha stream for the given seed and labels.
pub fn stream(seed: u64, labels: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, labels))
}

/// Bernoulli(2^-shift) coin from a 64-bit hash: true iff the top `shift`
/// bits are all zero. Exact for power-of-two probabilities.
#[inline]
pub fn dyadic_coin(hash: u64, shift: u32) -> bool {
    shift == 0 || (shift < 64 && hash >> (64 - shift) == 0)
}

/// Bernoulli(p) coin from a 64-bit hash using its top 53 bits.
#[inline]
pub fn unit_coin(hash: u64, p: f64) -> bool {
    ((hash >> 11) as f64) * (1.0 / (1u64 << 53) as f64) < p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_depends_on_every_label() {
        let base = derive(7, &[1, 2, 3]);
        assert_ne!(base, derive(7, &[1, 2, 4]));
        assert_ne!(base, derive(7, &[2, 1, 3]));
        assert_ne!(base, derive(8, &[1, 2, 3]));
        assert_eq!(base, derive(7, &[1, 2, 3]));
    }

    #[test]
    fn dyadic_coin_rate() {
        let hits = (0..1u64 << 16)
            .filter(|&i| dyadic_coin(mix64(i), 3))
            .count() as f64;
        let rate = hits / (1u64 << 16) as f64;
        assert!((rate - 0.125).abs() < 0.01, "{rate}");
        assert!((0..100).all(|i| dyadic_coin(mix64(i), 0)));
    }
}
