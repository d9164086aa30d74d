//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Flips a vector so its largest-magnitude entry is positive.
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best + 1e-12 * best.max(1.0) {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Eigenpairs of a symmetric matrix, eigenvalues ascending, eigenvectors as
/// columns with the sign convention of [`fix_sign`].
pub fn sym_eigen_ascending(m: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::NotSquare { rows: n, cols: m.ncols() });
    }
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 0).ok_or(Error::EigenFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure);
    }
    let mut vecs = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        let mut col: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        fix_sign(&mut col);
        vecs.set_column(k, &DVector::from_vec(col));
    }
    Ok((values, vecs))
}

/// Thin SVD with singular values descending. Each right singular vector is
/// sign-fixed and the matching left vector flipped with it.
pub struct SortedSvd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub fn svd_sorted(m: &DMatrix<f64>) -> Result<SortedSvd> {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    let svd = m.clone().try_svd(true, true, f64::EPSILON, 0).ok_or(Error::EigenFailure)?;
    let u_raw = svd.u.ok_or(Error::EigenFailure)?;
    let vt_raw = svd.v_t.ok_or(Error::EigenFailure)?;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let mut u = DMatrix::zeros(rows, k);
    let mut v = DMatrix::zeros(cols, k);
    let mut s = Vec::with_capacity(k);
    for (c, &i) in order.iter().enumerate() {
        let mut vc: Vec<f64> = vt_raw.row(i).iter().copied().collect();
        let before = vc.clone();
        fix_sign(&mut vc);
        let flip = if before.iter().zip(&vc).any(|(a, b)| a != b) { -1.0 } else { 1.0 };
        v.set_column(c, &DVector::from_vec(vc));
        u.set_column(c, &(u_raw.column(i) * flip));
        s.push(svd.singular_values[i]);
    }
    Ok(SortedSvd { u, s, v })
}

/// Solves a symmetric positive semi-definite system, falling back to LU.
pub fn solve_symmetric(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        return Ok(ch.solve(b));
    }
    a.clone().lu().solve(b).ok_or(Error::SingularSystem)
}

/// Condition check used before trusting an exact solve: true when the
/// smallest eigenvalue is negligible relative to the largest.
pub fn is_numerically_singular(a: &DMatrix<f64>) -> bool {
    match sym_eigen_ascending(a.clone()) {
        Ok((vals, _)) => {
            let max = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            max == 0.0 || vals[0] <= 1e-13 * max
        }
        Err(_) => true,
    }
}
