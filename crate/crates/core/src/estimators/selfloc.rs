use super::{kernel_weights, weighted_mean};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::linalg::dist;
use crate::points::Dataset;

/// Starting value of the self-localization iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum SelfInit {
    /// Plain local mean under the x-factor of the kernel.
    LocalMean,
    Supplied(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfLocalResult {
    pub value: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Fixed point of y* ← Σ K((x*,y*),(x_i,y_i)) y_i / Σ K(...), where the joint
/// kernel sees points laid out as [x, y].
pub fn self_kernel_local_mean(
    k_self: &Kernel,
    data: &Dataset,
    query: &[f64],
    init: SelfInit,
    max_iter: usize,
    tol: f64,
) -> Result<SelfLocalResult> {
    let y = data.real_targets()?;
    let joint = data.x.hstack(&y)?;
    let mut current = match init {
        SelfInit::Supplied(v) => {
            if v.len() != y.dim() {
                return Err(Error::DimensionMismatch { expected: y.dim(), found: v.len() });
            }
            v
        }
        SelfInit::LocalMean => {
            let (kx, _, _) =
                k_self.self_factors().ok_or_else(|| Error::invalid("local-mean initialization needs a separable self kernel"))?;
            let w = kernel_weights(kx, &data.x, query)?;
            weighted_mean(&w, &y).ok_or(Error::EmptyNeighborhood { index: 0 })?
        }
    };
    let mut point = query.to_vec();
    point.extend_from_slice(&current);
    for it in 1..=max_iter {
        point.truncate(query.len());
        point.extend_from_slice(&current);
        let w = kernel_weights(k_self, &joint, &point)?;
        let next = weighted_mean(&w, &y).ok_or(Error::EmptyNeighborhood { index: 0 })?;
        let step = dist(&next, &current);
        current = next;
        if step < tol {
            return Ok(SelfLocalResult { value: current, iterations: it, converged: true });
        }
    }
    Ok(SelfLocalResult { value: current, iterations: max_iter, converged: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{local_mean_predict, Fallback};
    use crate::points::PointSet;

    #[test]
    fn constant_y_factor_is_plain_local_mean() {
        let x = PointSet::from_scalars(&[0.0, 1.0, 2.5]).unwrap();
        let d = Dataset::regression(x, vec![1.0, -2.0, 0.5]).unwrap();
        let kx = Kernel::gaussian(1.0).unwrap();
        let k = Kernel::self_local(&kx, &Kernel::uniform(), 1).unwrap();
        let r = self_kernel_local_mean(&k, &d, &[0.7], SelfInit::LocalMean, 50, 1e-12).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
        let m = local_mean_predict(&kx, &d, &[0.7], Fallback::Error).unwrap();
        assert!((r.value[0] - m[0]).abs() < 1e-12);
    }

    #[test]
    fn equal_targets_are_fixed() {
        let x = PointSet::from_scalars(&[0.0, 1.0]).unwrap();
        let d = Dataset::regression(x, vec![4.0, 4.0]).unwrap();
        let g = Kernel::gaussian(0.3).unwrap();
        let k = Kernel::self_local(&g, &g, 1).unwrap();
        let r = self_kernel_local_mean(&k, &d, &[0.2], SelfInit::Supplied(vec![0.0]), 10, 1e-12).unwrap();
        assert!((r.value[0] - 4.0).abs() < 1e-12);
    }
}
