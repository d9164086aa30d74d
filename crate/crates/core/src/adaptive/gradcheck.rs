use crate::error::{Error, Result};

/// A scalar objective over a flat parameter vector with an analytic gradient.
pub trait Differentiable {
    fn n_params(&self) -> usize;
    fn value(&self, params: &[f64]) -> f64;
    fn gradient(&self, params: &[f64]) -> Vec<f64>;
}

/// Max over coordinates of |g_fd − g| / max(1e-12, |g|) with central
/// differences of step `eps`.
pub fn finite_diff_gradcheck(objective: &dyn Differentiable, params: &[f64], eps: f64) -> Result<f64> {
    if !(1e-8..=1e-3).contains(&eps) {
        return Err(Error::invalid(format!("step {eps} outside [1e-8, 1e-3]")));
    }
    if params.len() != objective.n_params() {
        return Err(Error::DimensionMismatch { expected: objective.n_params(), found: params.len() });
    }
    let g = objective.gradient(params);
    let mut p = params.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + eps;
        let up = objective.value(&p);
        p[i] = orig - eps;
        let down = objective.value(&p);
        p[i] = orig;
        let fd = (up - down) / (2.0 * eps);
        worst = worst.max((fd - g[i]).abs() / g[i].abs().max(1e-12));
    }
    Ok(worst)
}
