#![allow(dead_code)]

use logspiral::field::AngularField;
use logspiral::kernel::SpiralParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn params(beta: f64, m: u32) -> SpiralParams {
    SpiralParams::new(beta, m).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random trigonometric polynomial with modes `1..=modes` decaying like `1/k²`.
pub fn random_smooth(params: SpiralParams, n: usize, modes: usize, rng: &mut ChaCha8Rng) -> AngularField {
    let mean = rng.gen_range(-1.0..1.0);
    let coeffs: Vec<(f64, f64)> = (1..=modes)
        .map(|k| {
            let s = 1.0 / (k * k) as f64;
            (rng.gen_range(-s..s), rng.gen_range(-s..s))
        })
        .collect();
    let m = params.m() as f64;
    AngularField::from_fn(params, n, |t| {
        mean + coeffs
            .iter()
            .enumerate()
            .map(|(k, (a, b))| {
                let w = (k + 1) as f64 * m * t;
                a * w.cos() + b * w.sin()
            })
            .sum::<f64>()
    })
    .unwrap()
}
