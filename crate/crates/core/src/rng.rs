//! Reproducible random streams.
//!
//! Every Monte-Carlo sample and every optimizer restart owns a ChaCha8
//! stream keyed by `(seed, index)`. Work can be split across any number of
//! threads or shards without changing a single drawn number.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

pub type StreamRng = ChaCha8Rng;

/// The generator for substream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform sample from the probability simplex of dimension `n`
/// (symmetric Dirichlet with unit concentration).
pub fn dirichlet_uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = x.iter().sum();
        if total > 0.0 {
            return x.into_iter().map(|v| v / total).collect();
        }
    }
}
