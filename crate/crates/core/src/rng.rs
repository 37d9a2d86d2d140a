//! Counter-based random streams.
//!
//! Every draw is a pure function of `(seed, tag, rep, index, counter)`, so
//! draws can be produced in any order and on any number of workers without
//! changing the result. The mixing function is the SplitMix64 finalizer.

use rand_core::{impls, RngCore};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over the tag bytes; stable across platforms and releases.
fn tag_hash(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Identifies one independent stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    key: u64,
}

impl StreamKey {
    pub fn new(seed: u64, tag: &str, rep: u64, index: u64) -> Self {
        let mut k = mix64(seed.wrapping_add(GOLDEN_GAMMA));
        k = mix64(k ^ tag_hash(tag));
        k = mix64(k ^ rep.wrapping_mul(GOLDEN_GAMMA).wrapping_add(0x5851_f42d_4c95_7f2d));
        k = mix64(k ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03));
        Self { key: k }
    }

    /// Derive a sub-stream, e.g. one per unordered node pair.
    pub fn child(self, index: u64) -> Self {
        Self {
            key: mix64(self.key ^ mix64(index.wrapping_add(GOLDEN_GAMMA))),
        }
    }

    pub fn rng(self) -> CounterRng {
        CounterRng {
            key: self.key,
            counter: 0,
        }
    }

    /// The first uniform draw of the stream, in [0, 1).
    pub fn uniform(self) -> f64 {
        to_unit(mix64(self.key.wrapping_add(GOLDEN_GAMMA)))
    }
}

#[inline]
fn to_unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// SplitMix64 evaluated at `key + counter * gamma`.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn uniform(&mut self) -> f64 {
        to_unit(self.next_u64())
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)))
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        impls::fill_bytes_via_next(self, dst)
    }
}
