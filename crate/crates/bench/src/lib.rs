//! Seeded inputs shared by the criterion benchmarks under `benches/`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsanet::autodiff::Tensor2D;
use tsanet::mdc::ProbabilityTriple;
use tsanet::proposal::Proposal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn features(seed: u64, dim: usize, len: usize) -> Tensor2D {
    let mut rng = rng(seed);
    let values = (0..dim * len)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    Tensor2D::new(dim, len, values).unwrap()
}

/// Low random probability sequences with a few sharp peaks.
pub fn probabilities(seed: u64, len: usize) -> ProbabilityTriple {
    let mut rng = rng(seed);
    let mut seq = || {
        let mut v: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..0.3)).collect();
        for _ in 0..len / 16 {
            let t = rng.random_range(0..len);
            v[t] = rng.random_range(0.5..1.0);
        }
        v
    };
    ProbabilityTriple::new(seq(), seq(), seq()).unwrap()
}

pub fn proposals(seed: u64, count: usize, len: usize) -> Vec<Proposal> {
    let mut rng = rng(seed);
    (0..count)
        .map(|_| {
            let s = rng.random_range(0..len - 1);
            let e = rng.random_range(s + 1..len.min(s + len / 2 + 2));
            Proposal::new(s, e, rng.random(), rng.random(), rng.random())
        })
        .collect()
}
