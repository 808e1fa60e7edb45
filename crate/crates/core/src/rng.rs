//! Deterministic stream derivation for parallel replication.
//!
//! Every replication of a study owns a ChaCha stream derived from
//! (master seed, cell id, replication index) by SplitMix64 mixing, so
//! results are independent of scheduling and worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// 32-byte ChaCha seed for the (master, cell, rep) triple.
pub fn derive_seed(master_seed: u64, cell_id: u64, rep: u64) -> [u8; 32] {
    let h0 = mix(master_seed ^ 0x243f6a8885a308d3);
    let h1 = mix(h0 ^ cell_id.wrapping_mul(0x9e3779b97f4a7c15));
    let h2 = mix(h1 ^ rep.wrapping_mul(0xd1b54a32d192ed03));
    let mut seed = [0u8; 32];
    let mut s = h2;
    for word in seed.chunks_exact_mut(8) {
        s = s.wrapping_add(0x9e3779b97f4a7c15);
        word.copy_from_slice(&mix(s).to_le_bytes());
    }
    seed
}

/// Stream for replication `rep` of grid cell `cell_id` under `master_seed`.
/// Identical inputs give identical streams.
pub fn derive_rep_rng(master_seed: u64, cell_id: u64, rep: u64) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(derive_seed(master_seed, cell_id, rep))
}
