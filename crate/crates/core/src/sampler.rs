//! Reproducible randomness: a sampler is named by (identifier, n, time bound, seed).

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeededSampler {
    pub identifier: String,
    pub n: u64,
    pub time_bound: u64,
    pub seed: u64,
}

fn fnv1a(bytes: &[u8], mut h: u64) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

impl SeededSampler {
    pub fn new(identifier: &str, n: u64, time_bound: u64, seed: u64) -> SeededSampler {
        SeededSampler {
            identifier: identifier.to_string(),
            n,
            time_bound,
            seed,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut h = fnv1a(self.identifier.as_bytes(), 0xcbf2_9ce4_8422_2325);
        for v in [self.n, self.time_bound, self.seed] {
            h = fnv1a(&v.to_le_bytes(), h);
        }
        let mut key = [0u8; 32];
        for (i, chunk) in key.chunks_mut(8).enumerate() {
            chunk.copy_from_slice(&fnv1a(&(i as u64).to_le_bytes(), h).to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }

    /// An independent stream for a named sub-task.
    pub fn fork(&self, label: &str, index: u64) -> SeededSampler {
        SeededSampler {
            identifier: format!("{}/{}#{}", self.identifier, label, index),
            ..self.clone()
        }
    }

    pub fn bits(&self, k: usize) -> Vec<bool> {
        let mut r = self.rng();
        (0..k).map(|_| r.gen::<bool>()).collect()
    }
}

/// Uniform 64-lane words for bit-parallel sampling.
pub fn random_words<R: RngCore>(rng: &mut R, k: usize, out: &mut Vec<u64>) {
    out.clear();
    out.extend((0..k).map(|_| rng.next_u64()));
}
