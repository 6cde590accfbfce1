//! Seeded generators. Every random routine in the crate goes through here so
//! runs are reproducible from a single `u64`.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as Rng;

pub fn from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the `index`-th draw of a batch started from `seed`.
///
/// The counter is mixed before it is combined with the batch seed; a bare
/// `seed ^ index` would make the batches for seeds 0 and 1 the same set.
pub fn derive(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    #[test]
    fn derived_batches_do_not_overlap() {
        let a: BTreeSet<u64> = (0..64).map(|i| derive(0, i)).collect();
        let b: BTreeSet<u64> = (0..64).map(|i| derive(1, i)).collect();
        assert_eq!(a.intersection(&b).count(), 0);
    }
}
