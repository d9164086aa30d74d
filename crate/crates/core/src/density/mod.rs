//! Kernel density estimation, score estimates, Tweedie denoising, DAE chains
//! and the local-mean diffusion sampler.

mod diffusion;
mod noise;

pub use diffusion::{diffusion_generate, DiffusionSchedule};
pub use noise::{dae_chain, noise_sample, DaeChain, NoiseKind};

use crate::error::{Error, Result};
use crate::estimators::{kernel_weights, weighted_mean};
use crate::kernel::Kernel;
use crate::points::{Dataset, PointSet};

/// Volume of the unit ball in p dimensions.
fn unit_ball_volume(p: usize) -> f64 {
    match p {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / p as f64 * unit_ball_volume(p - 2),
    }
}

/// Kernel value scaled to integrate to one over its first argument.
/// Gaussian and Epanechnikov kernels get their density constants; any other
/// kernel is taken as already normalized.
pub fn density_kernel_value(k: &Kernel, x: &[f64], y: &[f64]) -> Result<f64> {
    let raw = k.eval(x, y)?;
    let p = x.len();
    let h = match k.bandwidth() {
        Some(h) => h,
        None => return Ok(raw),
    };
    if k.is_gaussian() {
        Ok(raw * (2.0 * std::f64::consts::PI * h * h).powf(-(p as f64) / 2.0))
    } else {
        // raw is 0.75 (1 - t^2)_+; the p-dimensional density is (p+2)/(2 V_p h^p) (1 - t^2)_+
        let c = (p as f64 + 2.0) / (2.0 * unit_ball_volume(p) * h.powi(p as i32));
        Ok(raw / 0.75 * c)
    }
}

/// p̂(x*) = (1/N) Σ K_h(x* − x_i) with a normalized kernel.
pub fn kde(k: &Kernel, x: &PointSet, query: &[f64]) -> Result<f64> {
    if query.len() != x.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: query.len() });
    }
    let mut s = 0.0;
    for xi in x.rows() {
        s += density_kernel_value(k, query, xi)?;
    }
    Ok(s / x.len() as f64)
}

/// Σ K₁(x*, x_i) K₂(y*, y_i) / Σ K₁(x*, x_i), with K₂ normalized as a density.
pub fn conditional_kde(k1: &Kernel, k2: &Kernel, data: &Dataset, x: &[f64], y: &[f64]) -> Result<f64> {
    let targets = data.real_targets()?;
    let w = kernel_weights(k1, &data.x, x)?;
    let den: f64 = w.iter().sum();
    if !(den > 0.0) {
        return Err(Error::EmptyNeighborhood { index: 0 });
    }
    let mut num = 0.0;
    for (wi, yi) in w.iter().zip(targets.rows()) {
        if *wi != 0.0 {
            num += wi * density_kernel_value(k2, y, yi)?;
        }
    }
    Ok(num / den)
}

/// (m_K(x*) − x*) / h² for the Gaussian kernel of bandwidth h: the mean-shift
/// estimate of ∇ log p(x*).
pub fn score_estimate(h: f64, x: &PointSet, query: &[f64]) -> Result<Vec<f64>> {
    let k = Kernel::gaussian(h)?;
    let w = kernel_weights(&k, x, query)?;
    let m = weighted_mean(&w, x).ok_or(Error::EmptyNeighborhood { index: 0 })?;
    Ok(m.iter().zip(query).map(|(a, b)| (a - b) / (h * h)).collect())
}

/// Analytic ∇ log p̂(x) of the normalized Gaussian KDE, computed as ∇p̂ / p̂.
pub fn kde_log_gradient(h: f64, x: &PointSet, query: &[f64]) -> Result<Vec<f64>> {
    let k = Kernel::gaussian(h)?;
    let n = x.len() as f64;
    let mut p = 0.0;
    let mut grad = vec![0.0; query.len()];
    for xi in x.rows() {
        let v = density_kernel_value(&k, query, xi)? / n;
        p += v;
        // d/dx exp(-|x - xi|^2 / 2h^2) = exp(..) (xi - x) / h^2
        for (g, (a, b)) in grad.iter_mut().zip(xi.iter().zip(query)) {
            *g += v * (a - b) / (h * h);
        }
    }
    if !(p > 0.0) {
        return Err(Error::EmptyNeighborhood { index: 0 });
    }
    Ok(grad.into_iter().map(|g| g / p).collect())
}

/// E(z | x) = x + σ² ∇ log p(x).
pub fn tweedie_denoise(sigma: f64, score: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64]) -> Result<Vec<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("noise level must be positive, got {sigma}")));
    }
    let s = score(x);
    if s.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: s.len() });
    }
    Ok(x.iter().zip(&s).map(|(a, g)| a + sigma * sigma * g).collect())
}
