//! Per-example random streams derived from one run seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Init = 1,
    Shuffle = 2,
    Pretrain = 3,
    SpeedRead = 4,
    Eval = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(run_seed: u64, stream: Stream, epoch: usize, index: usize) -> u64 {
    let mut h = splitmix64(run_seed);
    h = splitmix64(h ^ stream as u64);
    h = splitmix64(h ^ epoch as u64);
    splitmix64(h ^ index as u64)
}

pub fn example_rng(run_seed: u64, stream: Stream, epoch: usize, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(run_seed, stream, epoch, index))
}
