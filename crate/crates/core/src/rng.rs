//! Counter-based random streams.
//!
//! Every random quantity is drawn from a ChaCha8 stream keyed by
//! `(seed, domain)` and selected by a per-item stream index, so the value drawn
//! for vertex `i` does not depend on the order in which vertices are processed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Disjoint seed domains. Oracle streams never share a key with generator streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Weights = 0x5745_4947_4854_5301,
    CommunityWeights = 0x5745_4947_4854_5302,
    Positions = 0x504f_5349_5449_4f4e,
    Edges = 0x4544_4745_5300_0001,
    CommunityEdges = 0x4544_4745_5300_0002,
    Oracle = 0x4f52_4143_4c45_0001,
}

/// Returns the random stream for item `index` within `domain` for `seed`.
pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Per-replica seed, `seed XOR replica`.
pub fn replica_seed(seed: u64, replica: u64) -> u64 {
    seed ^ replica
}

/// Uniform draw in `(0, 1]`, safe to pass to `ln`.
pub fn open_unit<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.gen::<f64>()
}
