use rand_pcg::Pcg64;

/// SplitMix64 finaliser.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A reproducible random stream identified by a master seed and a stream
/// index. The same pair always yields the same draws, independent of which
/// thread consumes them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub index: u64,
}

impl RngStream {
    pub fn new(seed: u64, index: u64) -> Self {
        RngStream { seed, index }
    }

    /// Generator for this stream.
    pub fn rng(&self) -> Pcg64 {
        self.rng_at(0)
    }

    /// Generator for sub-stream `step` of this stream (e.g. one per time step).
    #[inline]
    pub fn rng_at(&self, step: u64) -> Pcg64 {
        let a = mix64(self.seed ^ mix64(self.index));
        let b = mix64(a ^ mix64(step.wrapping_add(0x632b_e59b_d9b4_e019)));
        let state = ((a as u128) << 64) | b as u128;
        Pcg64::new(state, (self.index as u128) << 1 | 1)
    }
}
