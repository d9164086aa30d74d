use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernel::{gram, normalize_rows, Kernel};
use crate::linalg::sym_eigen_ascending;
use crate::points::Dataset;

#[derive(Debug, Clone, PartialEq)]
pub struct MultiKernelFit {
    pub weights: Vec<f64>,
    /// ‖Σ w_m L̃_m y‖² at the solution.
    pub objective: f64,
    /// ‖w − P(w − ∇f)‖, zero at a constrained optimum.
    pub kkt_residual: f64,
    /// The objective divided by N: the leave-one-out mean squared error of
    /// the combined normalized kernel.
    pub loo_objective: f64,
    pub iterations: usize,
}

fn residuals(kernels: &[Kernel], data: &Dataset) -> Result<Vec<DMatrix<f64>>> {
    let y = data.real_targets()?.to_matrix();
    kernels
        .iter()
        .map(|k| {
            let mut g = gram(k, &data.x, &data.x)?;
            for i in 0..data.len() {
                g.values[(i, i)] = 0.0;
            }
            let kt = normalize_rows(&g)?;
            Ok(&y - &kt.values * &y)
        })
        .collect()
}

fn residual_gram(res: &[DMatrix<f64>]) -> DMatrix<f64> {
    let m = res.len();
    DMatrix::from_fn(m, m, |a, b| res[a].dot(&res[b]))
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// ‖Σ w_m L̃_m y‖² for hollow normalized Laplacians L̃_m = I − K̃_m.
pub fn multikernel_objective(kernels: &[Kernel], data: &Dataset, weights: &[f64]) -> Result<f64> {
    if weights.len() != kernels.len() {
        return Err(Error::DimensionMismatch { expected: kernels.len(), found: weights.len() });
    }
    let g = residual_gram(&residuals(kernels, data)?);
    let w = nalgebra::DVector::from_column_slice(weights);
    Ok((w.transpose() * g * &w)[(0, 0)])
}

/// Simplex-constrained weights minimizing the multi-kernel residual, by
/// projected gradient from the uniform start.
pub fn fit_multikernel(kernels: &[Kernel], data: &Dataset) -> Result<MultiKernelFit> {
    const ITERS: usize = 500;
    let m = kernels.len();
    if m < 2 {
        return Err(Error::invalid("need at least two kernels"));
    }
    let g = residual_gram(&residuals(kernels, data)?);
    let (vals, _) = sym_eigen_ascending(g.clone())?;
    let lipschitz = 2.0 * vals[m - 1];
    let grad = |w: &[f64]| -> Vec<f64> { (0..m).map(|a| 2.0 * (0..m).map(|b| g[(a, b)] * w[b]).sum::<f64>()).collect() };
    let objective = |w: &[f64]| -> f64 { (0..m).map(|a| (0..m).map(|b| w[a] * g[(a, b)] * w[b]).sum::<f64>()).sum() };
    let mut w = vec![1.0 / m as f64; m];
    if lipschitz > 0.0 {
        let step = 1.0 / lipschitz;
        for _ in 0..ITERS {
            let gr = grad(&w);
            let next: Vec<f64> = w.iter().zip(&gr).map(|(a, b)| a - step * b).collect();
            w = project_simplex(&next);
        }
    }
    let gr = grad(&w);
    let stepped: Vec<f64> = w.iter().zip(&gr).map(|(a, b)| a - b).collect();
    let kkt_residual = w.iter().zip(project_simplex(&stepped)).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let obj = objective(&w).max(0.0);
    Ok(MultiKernelFit { weights: w, objective: obj, kkt_residual, loo_objective: obj / data.len() as f64, iterations: ITERS })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::PointSet;

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.5, 0.5]);
        assert_eq!(p, vec![0.5, 0.5]);
        let p = project_simplex(&[2.0, 0.0]);
        assert_eq!(p, vec![1.0, 0.0]);
        let p = project_simplex(&[0.2, 0.2, 0.2]);
        assert!(p.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn identical_kernels_give_uniform_weights() {
        let x = PointSet::from_scalars(&[0.0, 0.3, 1.0, 1.7, 2.0]).unwrap();
        let d = Dataset::regression(x, vec![0.1, 0.5, -0.2, 0.9, 0.3]).unwrap();
        let k = Kernel::gaussian(0.5).unwrap();
        let fit = fit_multikernel(&[k.clone(), k], &d).unwrap();
        assert!((fit.weights[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn exact_kernel_wins() {
        let x = PointSet::from_scalars(&[0.0, 0.1, 5.0, 5.1, 10.0, 10.1]).unwrap();
        let d = Dataset::regression(x, vec![1.0, 1.0, 2.0, 2.0, 3.0, 3.0]).unwrap();
        let good = Kernel::neighborhood(0.5).unwrap();
        let fit = fit_multikernel(&[good, Kernel::uniform()], &d).unwrap();
        assert!(fit.weights[0] >= 0.99);
        assert!(fit.kkt_residual < 1e-8);
    }
}
