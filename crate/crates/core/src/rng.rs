//! Deterministic RNG stream derivation.
//!
//! Every randomized component takes an explicit 64-bit seed and derives
//! independent sub-streams from it, so patients, chains, and replications can
//! be processed in any order (or in parallel) without changing output.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

/// Fixed stream tags; distinct tags give unrelated sub-streams of a base seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamTag {
    DatasetParams,
    PatientNight,
    Outcome,
    Chain,
    ChainInit,
    Kmeans,
    Replication,
    Predictive,
}

impl StreamTag {
    fn constant(self) -> u64 {
        match self {
            StreamTag::DatasetParams => 0x5312_9fd1_0b8a_77c1,
            StreamTag::PatientNight => 0x9e37_79b9_7f4a_7c15,
            StreamTag::Outcome => 0xbf58_476d_1ce4_e5b9,
            StreamTag::Chain => 0x94d0_49bb_1331_11eb,
            StreamTag::ChainInit => 0x2545_f491_4f6c_dd1d,
            StreamTag::Kmeans => 0xd6e8_feb8_6659_fd93,
            StreamTag::Replication => 0xa24b_aed4_963e_e407,
            StreamTag::Predictive => 0x1759_edc5_7f87_4f39,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a sub-seed for `(tag, index)` under `base`.
pub fn derive_seed(base: u64, tag: StreamTag, index: u64) -> u64 {
    splitmix64(splitmix64(base ^ tag.constant()).wrapping_add(index))
}

/// Seeded stream for `(tag, index)` under `base`.
pub fn stream(base: u64, tag: StreamTag, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, tag, index))
}
