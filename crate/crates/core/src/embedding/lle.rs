use nalgebra::{DMatrix, DVector};

use super::EmbeddingResult;
use crate::error::{Error, Result};
use crate::kernel::StochasticMatrix;
use crate::linalg::{is_numerically_singular, solve_symmetric, sq_dist, svd_sorted, sym_eigen_ascending};
use crate::par;
use crate::points::PointSet;

fn neighbors(x: &PointSet, i: usize, k: usize) -> Vec<usize> {
    let mut order: Vec<(f64, usize)> =
        x.rows().enumerate().filter(|(j, _)| *j != i).map(|(j, r)| (sq_dist(x.row(i), r), j)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    order.into_iter().take(k).map(|(_, j)| j).collect()
}

/// Reconstruction weights: each row solves the sum-to-one least squares over
/// its `k_nn` nearest neighbors. Negative weights are clipped and the row
/// renormalized, so the result is a proper stochastic matrix.
pub fn lle_weights(x: &PointSet, k_nn: usize) -> Result<StochasticMatrix> {
    let n = x.len();
    if k_nn == 0 || k_nn >= n {
        return Err(Error::invalid(format!("neighbor count {k_nn} outside 1..{n}")));
    }
    let rows = par::try_map_range(n, |i| {
        let nb = neighbors(x, i, k_nn);
        let xi = x.row(i);
        let mut c = DMatrix::from_fn(k_nn, k_nn, |a, b| {
            x.row(nb[a]).iter().zip(x.row(nb[b])).zip(xi).map(|((u, v), o)| (u - o) * (v - o)).sum::<f64>()
        });
        let trace = c.trace();
        let mut w: Vec<f64> = if trace <= 0.0 {
            vec![1.0; k_nn]
        } else {
            if is_numerically_singular(&c) {
                for d in 0..k_nn {
                    c[(d, d)] += 1e-9 * trace;
                }
            }
            solve_symmetric(&c, &DVector::from_element(k_nn, 1.0))?.iter().copied().collect()
        };
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
        w.iter_mut().for_each(|v| *v = v.max(0.0));
        let s: f64 = w.iter().sum();
        if !(s > 0.0) {
            w = vec![1.0; k_nn];
        }
        let s: f64 = w.iter().sum();
        Ok(nb.into_iter().zip(w.into_iter().map(move |v| v / s)).collect::<Vec<_>>())
    })?;
    let mut values = DMatrix::zeros(n, n);
    for (i, r) in rows.into_iter().enumerate() {
        for (j, v) in r {
            values[(i, j)] = v;
        }
    }
    let degrees = (0..n).map(|i| values.row(i).sum()).collect();
    Ok(StochasticMatrix { values, degrees, empty_rows: vec![] })
}

fn normal_matrix(kt: &StochasticMatrix) -> Result<DMatrix<f64>> {
    let n = kt.nrows();
    if kt.ncols() != n {
        return Err(Error::NotSquare { rows: n, cols: kt.ncols() });
    }
    let l = DMatrix::identity(n, n) - &kt.values;
    Ok(l.transpose() * l)
}

/// tr(Zᵀ(I−K̃)ᵀ(I−K̃)Z) / N, the reconstruction objective for coordinates
/// normalized to ZᵀZ/N = I.
pub fn lle_objective(kt: &StochasticMatrix, z: &PointSet) -> Result<f64> {
    let m = normal_matrix(kt)?;
    if z.len() != m.nrows() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: z.len() });
    }
    let zm = z.to_matrix();
    Ok((zm.transpose() * m * &zm).trace() / z.len() as f64)
}

/// Bottom eigenvectors of M = (I−K̃)ᵀ(I−K̃) orthogonal to the constant vector,
/// scaled so ZᵀZ/N = I. The objective is the sum of the kept eigenvalues.
pub fn lle_embed(kt: &StochasticMatrix, r: usize) -> Result<EmbeddingResult> {
    let m = normal_matrix(kt)?;
    let n = m.nrows();
    if r == 0 || r + 1 >= n {
        return Err(Error::invalid(format!("embedding dimension {r} outside 1..{}", n.saturating_sub(1))));
    }
    // push the constant direction to the top of the spectrum
    let lift = m.trace() + 1.0;
    let shifted = &m + DMatrix::from_element(n, n, lift / n as f64);
    let (vals, vecs) = sym_eigen_ascending(shifted)?;
    let scale = (n as f64).sqrt();
    let mut data = vec![0.0; n * r];
    for c in 0..r {
        for i in 0..n {
            data[i * r + c] = vecs[(i, c)] * scale;
        }
    }
    let objective = vals[..r].iter().sum::<f64>().max(0.0);
    Ok(EmbeddingResult { z: PointSet::new(r, data)?, objective, method: "lle".into(), iterations: 0, trace: vec![] })
}

/// Centered PCA scores, whitened so ZᵀZ/N = I.
pub fn pca_embed(x: &PointSet, r: usize) -> Result<EmbeddingResult> {
    let n = x.len();
    if r == 0 || r > x.dim().min(n) {
        return Err(Error::invalid(format!("embedding dimension {r} out of range")));
    }
    let mean = x.mean();
    let centered = DMatrix::from_fn(n, x.dim(), |i, j| x.row(i)[j] - mean[j]);
    let svd = svd_sorted(&centered)?;
    let scale = (n as f64).sqrt();
    let mut data = vec![0.0; n * r];
    for c in 0..r {
        for i in 0..n {
            data[i * r + c] = svd.u[(i, c)] * scale;
        }
    }
    Ok(EmbeddingResult {
        z: PointSet::new(r, data)?,
        objective: svd.s[..r].iter().map(|s| s * s).sum(),
        method: "pca".into(),
        iterations: 0,
        trace: vec![],
    })
}
