use nalgebra::{DMatrix, DVector};

use super::kernel_weights;
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::linalg::{is_numerically_singular, solve_symmetric};
use crate::points::Dataset;

#[derive(Debug, Clone, PartialEq)]
pub struct LocalLinearResult {
    pub value: Vec<f64>,
    /// Equivalent-kernel row L(x*, X): value = Σ weights_i y_i.
    pub weights: Vec<f64>,
    /// Set when λ = 0 gave a singular system and the jitter 1e-10·trace was used.
    pub jittered: bool,
}

/// Kernel-weighted ridge regression with an intercept, evaluated at `query`.
pub fn local_linear_predict(k: &Kernel, data: &Dataset, query: &[f64], lambda: f64) -> Result<LocalLinearResult> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("ridge penalty must be non-negative, got {lambda}")));
    }
    let y = data.real_targets()?;
    let w = kernel_weights(k, &data.x, query)?;
    let (n, p) = (data.len(), data.x.dim());
    let mut design = DMatrix::zeros(n, p + 1);
    for (i, r) in data.x.rows().enumerate() {
        design[(i, 0)] = 1.0;
        for j in 0..p {
            design[(i, j + 1)] = r[j];
        }
    }
    let mut weighted = design.clone();
    for i in 0..n {
        weighted.row_mut(i).scale_mut(w[i]);
    }
    let mut a = design.transpose() * &weighted;
    let trace = a.trace();
    if !(trace > 0.0) {
        return Err(Error::EmptyNeighborhood { index: 0 });
    }
    let mut jittered = false;
    let mut ridge = lambda;
    if lambda == 0.0 && is_numerically_singular(&a) {
        ridge = 1e-10 * trace;
        jittered = true;
    }
    for j in 0..=p {
        a[(j, j)] += ridge;
    }
    let mut q = DVector::zeros(p + 1);
    q[0] = 1.0;
    for j in 0..p {
        q[j + 1] = query[j];
    }
    let u = solve_symmetric(&a, &q)?;
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    let l = &weighted * u;
    let weights: Vec<f64> = l.iter().copied().collect();
    let mut value = vec![0.0; y.dim()];
    for (li, yi) in weights.iter().zip(y.rows()) {
        for (v, t) in value.iter_mut().zip(yi) {
            *v += li * t;
        }
    }
    Ok(LocalLinearResult { value, weights, jittered })
}
