//! Seed splitting.
//!
//! One 64-bit master seed keys a ChaCha8 generator; each consumer gets its own
//! ChaCha stream number, so draws on one stream never shift another. Policy
//! and corruption streams are keyed by team and index within the team (not by
//! global agent id) so ablating one agent leaves the others' streams intact.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agents::Team;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKey {
    /// Per-episode seed derivation inside a batch.
    Episode(u64),
    Spawn,
    Wind,
    ItemNoise(u32),
    Deploy,
    Policy(Team, u32),
    Corruption(Team, u32),
}

impl StreamKey {
    fn id(self) -> u64 {
        const fn tag(t: u64) -> u64 {
            t << 56
        }
        let team = |t: Team| match t {
            Team::Scout => 1u64 << 48,
            Team::Forager => 2u64 << 48,
        };
        match self {
            StreamKey::Episode(i) => tag(1) | (i & 0x00ff_ffff_ffff_ffff),
            StreamKey::Spawn => tag(2),
            StreamKey::Wind => tag(3),
            StreamKey::ItemNoise(k) => tag(4) | k as u64,
            StreamKey::Deploy => tag(5),
            StreamKey::Policy(t, i) => tag(6) | team(t) | i as u64,
            StreamKey::Corruption(t, i) => tag(7) | team(t) | i as u64,
        }
    }
}

pub fn stream(master: u64, key: StreamKey) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(key.id());
    rng
}

/// Seed of episode `index` in a batch keyed by `master`.
pub fn episode_seed(master: u64, index: usize) -> u64 {
    stream(master, StreamKey::Episode(index as u64)).next_u64()
}
