//! Counter-based uniform streams: point `i` of stream `s` depends only on `(seed, s, i)`.

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const CHUNK: usize = 4096;

fn unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// `n` points, each `dim` coordinates uniform on `[lo, hi)`, laid out row-major.
pub fn uniform_points(seed: u64, stream: u64, dim: usize, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    if dim == 0 {
        return Vec::new();
    }
    let width = hi - lo;
    let chunks: Vec<Vec<f64>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            // two 32-bit words per u64 draw
            rng.set_word_pos((start * dim * 2) as u128);
            (0..(end - start) * dim).map(|_| lo + width * unit(rng.next_u64())).collect()
        })
        .collect();
    chunks.concat()
}
