//! Seeded, counter-based random streams.
//!
//! A stream is a ChaCha8 keystream keyed by the 64-bit seed. Independent
//! substreams are addressed by a stream id derived from a purpose tag and
//! indices, so a run's draws never depend on what other runs, or other
//! epochs of the same run, consumed.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// What a substream is used for. The discriminant feeds the stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Init = 1,
    Split = 2,
    Shuffle = 3,
    Noise = 4,
    Eval = 5,
    Embedding = 6,
    Generator = 7,
    Subsample = 8,
    Test = 9,
    Sample = 10,
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha8Rng,
}

fn mix(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Fresh stream for `(purpose, a, b)` under the same seed.
    pub fn substream(&self, purpose: Purpose, a: u64, b: u64) -> RngStream {
        let id = mix(mix(mix(purpose as u64) ^ a) ^ b.rotate_left(17));
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id);
        RngStream {
            seed: self.seed,
            rng,
        }
    }

    /// Rewinds to the first draw of this stream.
    pub fn reset(&mut self) {
        self.rng.set_word_pos(0);
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.normal();
        }
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.rng.random_range(0..=i);
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_draws() {
        let mut a = RngStream::new(42);
        let mut b = RngStream::new(42);
        for _ in 0..100 {
            assert_eq!(a.normal().to_bits(), b.normal().to_bits());
        }
    }

    #[test]
    fn substreams_are_independent_of_consumption() {
        let mut root = RngStream::new(7);
        let before = root.substream(Purpose::Shuffle, 3, 0).next_u64();
        for _ in 0..50 {
            root.next_u64();
        }
        let after = root.substream(Purpose::Shuffle, 3, 0).next_u64();
        assert_eq!(before, after);
        let other = root.substream(Purpose::Shuffle, 4, 0).next_u64();
        assert_ne!(before, other);
    }

    #[test]
    fn reset_rewinds() {
        let mut s = RngStream::new(1).substream(Purpose::Eval, 0, 0);
        let first: Vec<u64> = (0..5).map(|_| s.next_u64()).collect();
        s.reset();
        let again: Vec<u64> = (0..5).map(|_| s.next_u64()).collect();
        assert_eq!(first, again);
    }

    #[test]
    fn pinned_first_draw() {
        // guards against a dependency bump silently changing every seeded result
        let mut s = RngStream::new(0);
        let a = s.next_u64();
        assert_eq!(a, 0xb585_f767_a79a_3b6c);
        let sub = RngStream::new(0).substream(Purpose::Eval, 0, 0).next_u64();
        assert_eq!(sub, 0x877a_ee81_c5f5_12b7);
        assert_ne!(a, RngStream::new(1).next_u64());
    }
}
