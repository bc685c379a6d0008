//! Exact integer reference for label inflation. Endpoints are half-integers
//! and the inflation ratio a multiple of 1/20, so every region edge is a
//! multiple of 1/40 and can be computed without floating point.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsanet::labeling::{inflate_labels, AnnotationSet, Instance};

/// An instance in half-steps: it spans `[a / 2, b / 2]`.
#[derive(Debug, Clone, Copy)]
pub struct HalfInstance {
    pub a: i64,
    pub b: i64,
}

fn floor_div(x: i64, d: i64) -> i64 {
    x.div_euclid(d)
}

fn ceil_div(x: i64, d: i64) -> i64 {
    -(-x).div_euclid(d)
}

/// Marks `[floor(c - h), ceil(c + h)]` clipped to the video, where `c` is the
/// point rounded half up. Points and widths are passed in 1/40 units.
fn mark(seq: &mut [u8], point40: i64, half40: i64) {
    let center = floor_div(point40 + 20, 40);
    let lo = floor_div(center * 40 - half40, 40).max(0);
    let hi = ceil_div(center * 40 + half40, 40).min(seq.len() as i64 - 1);
    for t in lo..=hi {
        seq[t as usize] = 1;
    }
}

/// Start, mid and end targets for `instances` with inflation `j / 20`.
pub fn reference_labels(instances: &[HalfInstance], j: i64, len: usize) -> [Vec<u8>; 3] {
    let mut out = [vec![0; len], vec![0; len], vec![0; len]];
    for inst in instances {
        // half width j/20 * (b - a)/2 is j * (b - a) / 40
        let half40 = j * (inst.b - inst.a);
        mark(&mut out[0], inst.a * 20, half40);
        mark(&mut out[1], (inst.a + inst.b) * 10, half40);
        mark(&mut out[2], inst.b * 20, half40);
    }
    out
}

/// Builds random instance sets, `n` instances in total, and counts label
/// sequences that differ from the integer reference.
pub fn inflation_mismatches(n: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remaining = n;
    let mut bad = 0;
    while remaining > 0 {
        let len = rng.random_range(2..=300usize);
        let count = rng.random_range(1..=3usize).min(remaining);
        remaining -= count;
        let insts: Vec<HalfInstance> = (0..count)
            .map(|_| {
                let a = rng.random_range(0..2 * len as i64 - 2);
                let b = rng.random_range(a + 1..=2 * len as i64 - 2);
                HalfInstance { a, b }
            })
            .collect();
        let j = rng.random_range(0..=8);
        let ann = AnnotationSet::new(
            "v",
            len,
            1,
            insts
                .iter()
                .map(|i| Instance::new(i.a as f64 / 2.0, i.b as f64 / 2.0, 0))
                .collect(),
        )
        .unwrap();
        let labels = inflate_labels(&ann, j as f64 / 20.0).unwrap();
        let [s, m, e] = reference_labels(&insts, j, len);
        if labels.start != s || labels.mid != m || labels.end != e {
            bad += 1;
        }
    }
    bad
}

/// Positive index ranges of one 0/1 sequence.
pub fn runs(seq: &[u8]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut t = 0;
    while t < seq.len() {
        if seq[t] == 1 {
            let s = t;
            while t + 1 < seq.len() && seq[t + 1] == 1 {
                t += 1;
            }
            out.push((s, t));
        }
        t += 1;
    }
    out
}
