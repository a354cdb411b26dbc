//! Counter-keyed random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha stream whose
//! key is the tuple `(seed, stream, purpose, index)`, so a draw depends only
//! on its coordinates and never on which worker produced it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub(crate) enum Purpose {
    PathIncrements = 1,
    Bridge = 2,
    Terminal = 3,
    StepTables = 4,
}

pub(crate) fn keyed(seed: u64, stream: u64, purpose: Purpose, index: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&stream.to_le_bytes());
    key[16..24].copy_from_slice(&(purpose as u64).to_le_bytes());
    key[24..32].copy_from_slice(&index.to_le_bytes());
    ChaCha12Rng::from_seed(key)
}
