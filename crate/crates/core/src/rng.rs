//! Named, splittable pseudorandom streams.
//!
//! Every source of randomness in a run (task sampling, environment noise,
//! parameter initialisation, exploration) draws from its own stream derived
//! from the master seed, so changing one consumer never shifts the draws seen
//! by another.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// splitmix64 finaliser.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash of (master seed, stream name, repetition index).
pub fn derive_seed(master: u64, name: &str, index: u64) -> u64 {
    let mut h = mix64(master ^ 0x9e37_79b9_7f4a_7c15);
    h = mix64(h ^ fnv1a(name.as_bytes()));
    mix64(h ^ index.wrapping_mul(0x2545_f491_4f6c_dd1d))
}

#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        RandomStream { seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn derive(master: u64, name: &str, index: u64) -> Self {
        Self::new(derive_seed(master, name, index))
    }

    /// Child stream; advances `self` by one draw.
    pub fn split(&mut self, name: &str) -> Self {
        let base = self.rng.random::<u64>();
        Self::new(derive_seed(base, name, 0))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        mean + std * z
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
