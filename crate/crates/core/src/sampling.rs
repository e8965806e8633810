//! Seeded, balanced selection of samples from the two class pools.
//!
//! Each pool is first sorted by content digest, then shuffled with a
//! Fisher-Yates pass driven by ChaCha20. The key is the seed as 8
//! little-endian bytes followed by 24 zero bytes; the malware pool uses
//! stream 0 and the benign pool stream 1. Bounded draws use rejection
//! sampling on full 64-bit words: for a bound `b`, words below
//! `2^64 mod b` are discarded and the result is `word % b`. The first `n`
//! elements of the shuffled pool are the selection.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

use crate::apk::ApkSource;
use crate::features::ClassLabel;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SamplingError {
    #[error("{class} pool has {have} samples, {need} requested")]
    PoolTooSmall {
        class: ClassLabel,
        have: usize,
        need: usize,
    },
    #[error("samples per class must be at least 1")]
    ZeroRequested,
}

/// Anything identified by a content digest.
pub trait Digest {
    fn digest(&self) -> &str;
}

impl Digest for ApkSource {
    fn digest(&self) -> &str {
        &self.sha256
    }
}

impl Digest for String {
    fn digest(&self) -> &str {
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalancedSample<T> {
    pub malware: Vec<T>,
    pub benign: Vec<T>,
}

fn rng_for(seed: u64, class: ClassLabel) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream(match class {
        ClassLabel::Malware => 0,
        ClassLabel::Benign => 1,
    });
    rng
}

fn below(rng: &mut impl RngCore, bound: u64) -> u64 {
    let threshold = bound.wrapping_neg() % bound;
    loop {
        let word = rng.next_u64();
        if word >= threshold {
            return word % bound;
        }
    }
}

/// Sorts `pool` by digest and returns it in seeded shuffled order.
pub fn seeded_permutation<T: Digest + Clone>(pool: &[T], seed: u64, class: ClassLabel) -> Vec<T> {
    let mut items = pool.to_vec();
    items.sort_by(|a, b| a.digest().cmp(b.digest()));
    let mut rng = rng_for(seed, class);
    for i in (1..items.len()).rev() {
        let j = below(&mut rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
    items
}

pub fn sample_balanced<T: Digest + Clone>(
    malware_pool: &[T],
    benign_pool: &[T],
    n_per_class: usize,
    seed: u64,
) -> Result<BalancedSample<T>, SamplingError> {
    if n_per_class == 0 {
        return Err(SamplingError::ZeroRequested);
    }
    for (class, pool) in [
        (ClassLabel::Malware, malware_pool),
        (ClassLabel::Benign, benign_pool),
    ] {
        if pool.len() < n_per_class {
            return Err(SamplingError::PoolTooSmall {
                class,
                have: pool.len(),
                need: n_per_class,
            });
        }
    }
    let pick = |pool: &[T], class| {
        let mut chosen = seeded_permutation(pool, seed, class);
        chosen.truncate(n_per_class);
        chosen
    };
    Ok(BalancedSample {
        malware: pick(malware_pool, ClassLabel::Malware),
        benign: pick(benign_pool, ClassLabel::Benign),
    })
}
