//! Counter-based random streams.
//!
//! Every draw in a simulation belongs to a stream identified by
//! `(master_seed, rep, round, tag)`:
//!
//! - the ChaCha8 key is four successive SplitMix64 outputs from the state
//!   `master_seed ⊕ splitmix64(rep)`;
//! - the ChaCha stream id is the purpose tag;
//! - round `n` starts at word position `n · 2³²`.
//!
//! Streams never overlap unless a single round consumes more than 2³² words,
//! and no draw depends on how many draws another rep, round or purpose made.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag {
    /// Nature's outcome vectors.
    Nature = 1,
    /// Randomized allocation rules.
    Policy = 2,
    /// Treatment assignment in randomized experiments.
    Assign = 3,
    /// Sampling done by diagnostics.
    Diagnostic = 4,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn key(master_seed: u64, rep: u64) -> [u8; 32] {
    let mut r = rep;
    let mut state = master_seed ^ splitmix64(&mut r);
    let mut bytes = [0u8; 32];
    for chunk in bytes.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    bytes
}

/// One `(master_seed, rep, tag)` stream, positioned per round.
#[derive(Debug, Clone)]
pub struct Stream {
    rng: ChaCha8Rng,
}

impl Stream {
    pub fn new(master_seed: u64, rep: u64, tag: Tag) -> Self {
        let mut rng = ChaCha8Rng::from_seed(key(master_seed, rep));
        rng.set_stream(tag as u64);
        Self { rng }
    }

    /// The generator positioned at the start of round `n`.
    pub fn at_round(&mut self, n: u64) -> &mut ChaCha8Rng {
        self.rng.set_word_pos(u128::from(n) << 32);
        &mut self.rng
    }
}
