//! Counter-keyed random streams.
//!
//! Every random draw in the crate comes from a generator keyed by
//! `(master seed, stream id, index)`, so results never depend on how work is
//! split between threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream identifiers keep unrelated consumers of one master seed apart.
pub mod stream {
    pub const CHART: u64 = 0x4348_4152;
    pub const CHANNEL: u64 = 0x4348_414e;
    pub const FRAME: u64 = 0x4652_414d;
    pub const CODEGEN: u64 = 0x434f_4445;
    pub const QC: u64 = 0x5143_5143;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for item `index` of stream `stream` under `master`.
pub fn keyed(master: u64, stream: u64, index: u64) -> StreamRng {
    let mut seed = [0u8; 32];
    let mut state = splitmix(master) ^ splitmix(stream.rotate_left(17)) ^ index;
    for chunk in seed.chunks_mut(8) {
        state = splitmix(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Two-level key, e.g. (grid point, sample block).
pub fn keyed2(master: u64, stream: u64, outer: u64, inner: u64) -> StreamRng {
    keyed(master, stream, splitmix(outer).wrapping_add(inner))
}
