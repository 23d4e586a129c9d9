//! Seeded Monte Carlo in fixed-size blocks. Block `b` draws from ChaCha20
//! stream `tag ^ b`, and block sums are reduced in block order, so results do
//! not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::ordered_sum;

/// Sample mean and variance of a block run, plus the largest side value any
/// sample reported.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Moments {
    pub n: usize,
    pub mean: f64,
    pub var: f64,
    pub side_max: f64,
}

impl Moments {
    /// Three standard errors of the mean.
    pub fn three_se(&self) -> f64 {
        3.0 * (self.var / self.n as f64).sqrt()
    }
}

/// Draw `n` samples of `f` in blocks of `block`. `f` returns the sample and a
/// side value (for instance a deterministic error bound) whose maximum is kept.
pub(crate) fn run_blocks<F>(seed: u64, tag: u64, n: usize, block: usize, f: F) -> Moments
where
    F: Fn(&mut ChaCha20Rng) -> (f64, f64) + Sync,
{
    let blocks = n.div_ceil(block);
    let sums: Vec<(f64, f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(tag ^ b as u64);
            let count = block.min(n - b * block);
            let (mut s1, mut s2, mut side) = (0.0, 0.0, 0.0f64);
            for _ in 0..count {
                let (v, e) = f(&mut rng);
                s1 += v;
                s2 += v * v;
                side = side.max(e);
            }
            (s1, s2, side)
        })
        .collect();
    let nf = n as f64;
    let s1 = ordered_sum(&sums.iter().map(|p| p.0).collect::<Vec<_>>());
    let s2 = ordered_sum(&sums.iter().map(|p| p.1).collect::<Vec<_>>());
    let mean = s1 / nf;
    Moments {
        n,
        mean,
        var: ((s2 / nf - mean * mean) * nf / (nf - 1.0)).max(0.0),
        side_max: sums.iter().map(|p| p.2).fold(0.0, f64::max),
    }
}

/// Uniform point on the unit sphere `S^{n−1}`.
pub(crate) fn random_direction<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let l = crate::models::norm(&v);
        if l > 1e-12 {
            return v.into_iter().map(|c| c / l).collect();
        }
    }
}
