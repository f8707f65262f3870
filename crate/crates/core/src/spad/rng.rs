//! Counter-based random streams.
//!
//! A ChaCha8 key is derived from the run seed, the frame index selects the
//! ChaCha stream, and the pixel index selects a disjoint 2^36-word window of
//! that stream. Any pixel's draws can therefore be regenerated independently
//! of evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PIXEL_WINDOW_BITS: u32 = 36;

#[derive(Clone, Debug)]
pub struct PixelStreams {
    base: ChaCha8Rng,
}

impl PixelStreams {
    pub fn new(seed: u64, frame: u64) -> Self {
        let mut base = ChaCha8Rng::seed_from_u64(seed);
        base.set_stream(frame);
        Self { base }
    }

    /// Generator for one pixel; starts at the beginning of that pixel's window.
    pub fn pixel(&self, index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_word_pos((index as u128) << PIXEL_WINDOW_BITS);
        rng
    }
}
