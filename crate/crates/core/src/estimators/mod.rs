//! Pointwise local predictors.

mod centerless;
mod inference;
mod linear;
mod local;
mod pca;
mod selfloc;

pub use centerless::{centerless_lazy_step, local_centerless_classify};
pub use inference::{inference_precompute, inference_predict, InferenceRules};
pub use linear::{local_linear_predict, LocalLinearResult};
pub use local::{
    knn_predict, lazy_transform, local_fit, local_margin_sign, local_mean_predict, local_mode_predict, loo_error,
    monte_carlo_local_mean, Fallback, LikelihoodModel, LocalFitResult, Loss, Prediction,
};
pub use pca::{local_pca, LocalPca, LocalPcaModel};
pub use selfloc::{self_kernel_local_mean, SelfInit, SelfLocalResult};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::linalg::sq_dist;
use crate::points::PointSet;

/// K(x*, x_i) for every sample point.
pub fn kernel_weights(k: &Kernel, x: &PointSet, query: &[f64]) -> Result<Vec<f64>> {
    if query.len() != x.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: query.len() });
    }
    x.rows().map(|r| k.eval(query, r)).collect()
}

/// Σ w_i y_i / Σ w_i, or `None` when the weights have no positive mass.
pub fn weighted_mean(w: &[f64], y: &PointSet) -> Option<Vec<f64>> {
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let mut out = vec![0.0; y.dim()];
    for (wi, yi) in w.iter().zip(y.rows()) {
        if *wi != 0.0 {
            for (o, v) in out.iter_mut().zip(yi) {
                *o += wi * v;
            }
        }
    }
    out.iter_mut().for_each(|o| *o /= total);
    Some(out)
}

/// Index of the sample nearest to `query`, ties to the lowest index.
pub(crate) fn nearest_index(x: &PointSet, query: &[f64]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (i, r) in x.rows().enumerate() {
        let d = sq_dist(query, r);
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

/// Argmax with ties going to the lowest index.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}
