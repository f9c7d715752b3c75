//! Deterministic randomness.
//!
//! Every stochastic operation in this crate draws from a [`RandomSource`]:
//! a counter-based generator seeded from a single 64-bit value. Identical
//! seed plus identical call sequence reproduces every run bit for bit,
//! which is what makes the harness results replayable. Independent
//! generators for concurrent work are derived by seed splitting, never by
//! sharing state.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded random generator with bit-for-bit reproducible output.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// The seed this source was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derive an independent child generator by seed splitting.
    ///
    /// The child's stream is decorrelated from the parent's continuation,
    /// so parent and child can be consumed in any interleaving without
    /// affecting each other's outputs.
    pub fn split(&mut self) -> RandomSource {
        let raw = self.rng.next_u64();
        RandomSource::new(mix64(raw ^ 0x9e37_79b9_7f4a_7c15))
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// splitmix64 finalizer; full avalanche on 64 bits.
fn mix64(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Fold an ordered list of values into one seed.
///
/// Stable across platforms and releases (unlike `DefaultHasher`), so
/// harness seeds derived from experiment coordinates never drift.
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut acc = 0x6a09_e667_f3bc_c909u64; // sqrt(2) fraction
    for &p in parts {
        acc = mix64(acc ^ p).wrapping_add(0x9e37_79b9_7f4a_7c15);
    }
    mix64(acc)
}

/// FNV-1a over UTF-8 bytes; used to fold identifier strings into seeds.
pub fn hash_str(s: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
