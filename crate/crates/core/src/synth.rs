//! Seeded synthetic datasets standing in for the figure experiments.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::points::{Dataset, PointSet};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Isotropic Gaussian blobs, `n` points split as evenly as possible.
pub fn blobs(centers: &[Vec<f64>], n: usize, sigma: f64, seed: u64) -> Result<(PointSet, Vec<usize>)> {
    if centers.is_empty() || n < centers.len() {
        return Err(Error::invalid("need at least one point per blob"));
    }
    let mut r = rng(seed);
    let dim = centers[0].len();
    let mut data = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i * centers.len() / n;
        for v in &centers[c] {
            data.push(v + sigma * r.sample::<f64, _>(StandardNormal));
        }
        labels.push(c);
    }
    Ok((PointSet::new(dim, data)?, labels))
}

/// y = sin(x) + N(0, σ²) with x uniform on [0, 2π], sorted.
pub fn noisy_sine(n: usize, sigma: f64, seed: u64) -> Result<Dataset> {
    let mut r = rng(seed);
    let mut x: Vec<f64> = (0..n).map(|_| r.random::<f64>() * 2.0 * PI).collect();
    x.sort_by(f64::total_cmp);
    let y = x.iter().map(|v| v.sin() + sigma * r.sample::<f64, _>(StandardNormal)).collect();
    Dataset::regression(PointSet::from_scalars(&x)?, y)
}

/// Step signal (zeros then ones) and a noisy copy.
pub fn noisy_step(len: usize, sigma: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let clean: Vec<f64> = (0..len).map(|t| if t < len / 2 { 0.0 } else { 1.0 }).collect();
    let noisy = clean.iter().map(|v| v + sigma * r.sample::<f64, _>(StandardNormal)).collect();
    (clean, noisy)
}

/// Swiss roll: a 2-D sheet rolled up in 3-D. Returns points and the roll
/// parameter t ∈ [1.5π, 4.5π].
pub fn swiss_roll(n: usize, noise: f64, seed: u64) -> Result<(PointSet, Vec<f64>)> {
    let mut r = rng(seed);
    let mut data = Vec::with_capacity(3 * n);
    let mut ts = Vec::with_capacity(n);
    for _ in 0..n {
        let t = 1.5 * PI * (1.0 + 2.0 * r.random::<f64>());
        let height = 10.0 * r.random::<f64>();
        let mut jitter = || noise * r.sample::<f64, _>(StandardNormal);
        data.push(t * t.cos() + jitter());
        data.push(height + jitter());
        data.push(t * t.sin() + jitter());
        ts.push(t);
    }
    Ok((PointSet::new(3, data)?, ts))
}

/// Equal-weight 1-D Gaussian mixture with common variance.
pub fn gaussian_mixture_1d(n: usize, means: &[f64], variance: f64, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let sd = variance.sqrt();
    (0..n)
        .map(|_| {
            let c = means[r.random_range(0..means.len())];
            c + sd * r.sample::<f64, _>(StandardNormal)
        })
        .collect()
}

/// Six two-dimensional value tokens in two blocks of three.
pub fn toy_tokens() -> PointSet {
    PointSet::from_rows(&[[1.0, 0.0], [0.9, 0.1], [1.0, 0.2], [0.0, 1.0], [0.1, 0.9], [0.2, 1.0]]).expect("static data")
}
