//! Seeded random streams.
//!
//! Every run derives independent ChaCha8 streams from one 64-bit seed, keyed by
//! player and purpose, so that availability draws never interleave with action
//! sampling when a configuration changes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// What a stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Purpose {
    Generate = 1,
    Availability = 2,
    Action = 3,
    Evaluation = 4,
    Init = 5,
}

/// Stream for `(player, purpose)` under `seed`. Use `player = 0xff` for streams
/// not tied to a player.
pub fn stream(seed: u64, player: u8, purpose: Purpose) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((player as u64) << 8) | purpose as u64);
    rng
}

/// Stream with an extra index, e.g. one per Monte Carlo block.
pub fn substream(seed: u64, player: u8, purpose: Purpose, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((index << 16) | ((player as u64) << 8) | purpose as u64);
    rng
}
