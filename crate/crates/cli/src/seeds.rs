//! Splittable seeding: every cell draws from its own ChaCha stream of the
//! master seed, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn cell_rng(master: u64, cell: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(cell);
    rng
}

/// Where derived seeds are read in a cell's stream, far past anything the
/// cell itself draws.
const SEED_OFFSET: u128 = 1 << 64;

/// Derived seed for code that takes a `u64` (atom sampling).
pub fn cell_seed(master: u64, cell: u64, salt: u64) -> u64 {
    let mut rng = cell_rng(master, cell);
    rng.set_word_pos(SEED_OFFSET + u128::from(salt) * 2);
    rand::Rng::random(&mut rng)
}
