//! Reproducible random streams.
//!
//! A stream is a ChaCha12 generator keyed by the master seed with the
//! run index selecting the cipher's stream id, so any run's draws can be
//! regenerated without touching shared state.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self { master_seed, stream_index }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// A child stream, keyed off this one. Distinct labels give distinct streams.
    pub fn child(&self, label: &str) -> SeedStream {
        let key = format!("{}:{}:{label}", self.master_seed, self.stream_index);
        SeedStream::new(hash_seed(&key), 0)
    }
}

pub fn derive_stream(master_seed: u64, run_index: u64) -> SeedStream {
    SeedStream::new(master_seed, run_index)
}

/// First eight bytes of SHA-256 of `key`, little endian.
pub fn hash_seed(key: &str) -> u64 {
    let digest = Sha256::digest(key.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn standard_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn normal_vec<R: rand::Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| standard_normal(rng)).collect()
}
