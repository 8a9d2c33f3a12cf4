//! Deterministic randomness helpers.
//!
//! All stochastic paths (word sampling, Gillespie) draw from a seeded
//! ChaCha12 stream, so identical seeds give bit-identical runs on every
//! platform.

use alloc::vec::Vec;

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

/// The crate's seeded random source.
pub fn seeded(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Unbiased uniform draw from `0..n` by rejection.
pub fn below<R: RngCore>(rng: &mut R, n: u64) -> u64 {
    debug_assert!(n > 0);
    let rem = u64::MAX - (u64::MAX % n + 1) % n; // last acceptable value
    loop {
        let x = rng.next_u64();
        if x <= rem {
            return x % n;
        }
    }
}

/// Uniform f64 in `[0, 1)` with 53 random bits.
pub fn unit_f64<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Uniform k-subset of `0..n`, returned sorted. Partial Fisher-Yates.
pub fn subset<R: RngCore>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    debug_assert!(k <= n);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + below(rng, (n - i) as u64) as usize;
        pool.swap(i, j);
    }
    let mut chosen = pool[..k].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Fixed permutation of `0..n` derived from a seed (for the shuffled
/// processing-order variant).
pub fn permutation(seed: u64, n: usize) -> Vec<usize> {
    let mut rng = seeded(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = below(&mut rng, (i + 1) as u64) as usize;
        perm.swap(i, j);
    }
    perm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn below_is_in_range_and_deterministic() {
        let mut a = seeded(42);
        let mut b = seeded(42);
        for n in 1..50u64 {
            let x = below(&mut a, n);
            assert!(x < n);
            assert_eq!(x, below(&mut b, n));
        }
    }

    #[test]
    fn subset_is_sorted_distinct() {
        let mut rng = seeded(7);
        for _ in 0..100 {
            let s = subset(&mut rng, 10, 4);
            assert_eq!(s.len(), 4);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert!(s.iter().all(|&x| x < 10));
        }
    }

    #[test]
    fn permutation_is_fixed_by_seed() {
        assert_eq!(permutation(3, 6), permutation(3, 6));
        let p = permutation(3, 6);
        let mut sorted = p.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, alloc::vec![0, 1, 2, 3, 4, 5]);
    }
}
