//! Seeded randomness.
//!
//! All randomness is drawn from ChaCha8 (`rand_chacha::ChaCha8Rng`), which is
//! specified bit-for-bit and platform independent. Work that is split into
//! independent items (cohort records, weight initialization, shuffles) uses
//! `stream(seed, index)`: the same 256-bit key derived from `seed`, with the
//! ChaCha stream id set to `index`. Item `i` therefore sees the same numbers
//! regardless of how many items are generated or in what order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform draw in `[0, 1)`.
pub fn unit(rng: &mut StreamRng) -> f64 {
    rng.gen::<f64>()
}

/// Inverse-CDF draw from a discrete distribution. Mass lost to rounding lands on the last index.
pub fn categorical(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Uniformly random permutation of `0..n` (Fisher-Yates).
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = seeded(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        idx.swap(i, j);
    }
    idx
}
