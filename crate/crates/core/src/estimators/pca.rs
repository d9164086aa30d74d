use nalgebra::{DMatrix, DVector};

use super::{kernel_weights, weighted_mean};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::linalg::svd_sorted;
use crate::points::PointSet;

/// Weighted local mean and principal directions (p×r, orthonormal columns).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPca {
    pub mean: Vec<f64>,
    pub basis: DMatrix<f64>,
}

impl LocalPca {
    /// Vᵀ(x − μ).
    pub fn coordinates(&self, x: &[f64]) -> Vec<f64> {
        let c = DVector::from_iterator(x.len(), x.iter().zip(&self.mean).map(|(a, m)| a - m));
        (self.basis.transpose() * c).iter().copied().collect()
    }

    /// μ + VVᵀ(x − μ).
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let z = DVector::from_vec(self.coordinates(x));
        let back = &self.basis * z;
        self.mean.iter().zip(back.iter()).map(|(m, b)| m + b).collect()
    }
}

fn weighted_pca(x: &PointSet, w: &[f64], r: usize) -> Result<LocalPca> {
    let p = x.dim();
    if r == 0 || r > p {
        return Err(Error::invalid(format!("target dimension {r} outside 1..={p}")));
    }
    let mean = weighted_mean(w, x).ok_or(Error::EmptyNeighborhood { index: 0 })?;
    if r == p {
        return Ok(LocalPca { mean, basis: DMatrix::identity(p, p) });
    }
    let rows: Vec<usize> = (0..x.len()).filter(|&i| w[i] > 0.0).collect();
    let mut centered = DMatrix::zeros(rows.len(), p);
    for (a, &i) in rows.iter().enumerate() {
        let s = w[i].sqrt();
        for j in 0..p {
            centered[(a, j)] = s * (x.row(i)[j] - mean[j]);
        }
    }
    let svd = svd_sorted(&centered)?;
    let top = svd.s.first().copied().unwrap_or(0.0);
    let rank = svd.s.iter().filter(|s| top > 0.0 && **s > 1e-10 * top).count();
    if rank < r {
        return Err(Error::RankDeficient { needed: r, found: rank });
    }
    Ok(LocalPca { mean, basis: svd.v.columns(0, r).into_owned() })
}

/// Local PCA at `query`: rows centered on the local mean and scaled by
/// √K(x*, x_i) before the SVD.
pub fn local_pca(k: &Kernel, x: &PointSet, query: &[f64], r: usize) -> Result<LocalPca> {
    let w = kernel_weights(k, x, query)?;
    weighted_pca(x, &w, r)
}

/// Local PCA encoder/reconstructor with the global (uniform-weight) PCA cached.
#[derive(Debug, Clone)]
pub struct LocalPcaModel {
    kernel: Kernel,
    data: PointSet,
    r: usize,
    global: LocalPca,
}

impl LocalPcaModel {
    pub fn new(kernel: Kernel, data: PointSet, r: usize) -> Result<Self> {
        let global = weighted_pca(&data, &vec![1.0; data.len()], r)?;
        Ok(Self { kernel, data, r, global })
    }

    pub fn global(&self) -> &LocalPca {
        &self.global
    }

    pub fn local(&self, x: &[f64]) -> Result<LocalPca> {
        local_pca(&self.kernel, &self.data, x, self.r)
    }

    /// V_xᵀ(x − μ_x) + Vᵀ(μ_x − μ).
    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        let loc = self.local(x)?;
        let a = loc.coordinates(x);
        let b = self.global.coordinates(&loc.mean);
        Ok(a.iter().zip(&b).map(|(u, v)| u + v).collect())
    }

    /// (I − V_xV_xᵀ)μ_x + V_xV_xᵀx.
    pub fn reconstruct(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.local(x)?.project(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn line_is_reconstructed_exactly() {
        let x = PointSet::from_rows(&[[0.0, 0.0], [1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]).unwrap();
        let m = LocalPcaModel::new(Kernel::gaussian(1.0).unwrap(), x.clone(), 1).unwrap();
        for q in x.rows() {
            let r = m.reconstruct(q).unwrap();
            assert_relative_eq!(r[0], q[0], epsilon = 1e-10);
            assert_relative_eq!(r[1], q[1], epsilon = 1e-10);
        }
    }

    #[test]
    fn symmetric_pair_axis() {
        let x = PointSet::from_rows(&[[-1.0, 1.0], [1.0, -1.0]]).unwrap();
        let l = local_pca(&Kernel::gaussian(1.0).unwrap(), &x, &[0.0, 0.0], 1).unwrap();
        let s = 0.5f64.sqrt();
        assert_relative_eq!(l.basis[(0, 0)].abs(), s, epsilon = 1e-12);
        assert_relative_eq!(l.basis[(1, 0)].abs(), s, epsilon = 1e-12);
        assert_relative_eq!(l.basis[(0, 0)], -l.basis[(1, 0)], epsilon = 1e-12);
    }

    #[test]
    fn rank_deficiency_reported() {
        let x = PointSet::from_rows(&[[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]).unwrap();
        let e = local_pca(&Kernel::uniform(), &x, &[0.0, 0.0, 0.0], 2).unwrap_err();
        assert_eq!(e, Error::RankDeficient { needed: 2, found: 1 });
    }
}
