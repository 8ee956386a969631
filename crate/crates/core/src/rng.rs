//! Deterministic, splittable random streams.
//!
//! Every replica draws from its own generator, seeded from a stream id that
//! is a pure function of `(master seed, experiment tag, n, replica)`. Work can
//! therefore be scheduled on any number of workers, in any order, without
//! changing a single output bit.

use rand::SeedableRng;
use rayon::prelude::*;
use rand_xoshiro::Xoshiro256PlusPlus;

/// Generator used by every sampler in the crate.
pub type SimRng = Xoshiro256PlusPlus;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    tag.bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Stream id for one `(master, tag, n, replica)` coordinate.
pub fn stream_id(master: u64, tag: &str, n: u64, replica: u64) -> u64 {
    let mut h = mix64(master ^ fnv1a(tag));
    h = mix64(h ^ mix64(n.wrapping_add(0x6a09_e667_f3bc_c908)));
    mix64(h ^ mix64(replica.wrapping_add(0xbb67_ae85_84ca_a73b)))
}

/// A family of replica streams sharing a master seed and a tag.
#[derive(Debug, Clone)]
pub struct Streams {
    master: u64,
    tag: String,
}

impl Streams {
    pub fn new(master: u64, tag: impl Into<String>) -> Self {
        Self {
            master,
            tag: tag.into(),
        }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    /// Child family, e.g. one per `v` value in a sweep.
    pub fn child(&self, sub: &str) -> Self {
        Self {
            master: self.master,
            tag: format!("{}/{}", self.tag, sub),
        }
    }

    pub fn id(&self, n: u64, replica: u64) -> u64 {
        stream_id(self.master, &self.tag, n, replica)
    }

    pub fn rng(&self, n: u64, replica: u64) -> SimRng {
        SimRng::seed_from_u64(self.id(n, replica))
    }
}

/// Runs `count` replicas in parallel, replica `r` drawing from
/// `streams.rng(n, r)`. Results come back in replica order.
pub fn replicate<T, F>(streams: &Streams, n: u64, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SimRng, u64) -> T + Sync + Send,
{
    (0..count as u64)
        .into_par_iter()
        .map(|r| f(&mut streams.rng(n, r), r))
        .collect()
}

/// Convenience for tests and one-off draws.
pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
