use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::svd_sorted;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmdsMethod {
    Svd,
    Nmf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmdsResult {
    pub phi: DMatrix<f64>,
    pub psi: DMatrix<f64>,
    /// ‖K − ΦΨᵀ‖²_F.
    pub strain: f64,
    /// Strain after every NMF sweep (the initial value first).
    pub trace: Vec<f64>,
}

fn strain(k: &DMatrix<f64>, phi: &DMatrix<f64>, psi: &DMatrix<f64>) -> f64 {
    (k - phi * psi.transpose()).norm_squared()
}

/// Asymmetric MDS: K ≈ ΦΨᵀ with rank q.
pub fn amds_factorize(k: &DMatrix<f64>, q: usize, method: AmdsMethod, iters: usize) -> Result<AmdsResult> {
    let (n, m) = k.shape();
    if q == 0 || q > n.min(m) {
        return Err(Error::invalid(format!("rank {q} outside 1..={}", n.min(m))));
    }
    if method == AmdsMethod::Nmf && k.iter().any(|v| *v < 0.0) {
        return Err(Error::NegativeInputForNmf);
    }
    let svd = svd_sorted(k)?;
    let mut phi = DMatrix::zeros(n, q);
    let mut psi = DMatrix::zeros(m, q);
    for c in 0..q {
        let s = svd.s[c].sqrt();
        phi.set_column(c, &(svd.u.column(c) * s));
        psi.set_column(c, &(svd.v.column(c) * s));
    }
    if method == AmdsMethod::Svd {
        let st = strain(k, &phi, &psi);
        return Ok(AmdsResult { phi, psi, strain: st, trace: vec![] });
    }
    // positive start derived from the SVD factors so results are deterministic
    let offset = 1e-2 * (k.sum() / (n * m) as f64).max(1e-12).sqrt();
    phi.iter_mut().for_each(|v| *v = v.abs() + offset);
    psi.iter_mut().for_each(|v| *v = v.abs() + offset);
    let mut trace = vec![strain(k, &phi, &psi)];
    for _ in 0..iters {
        let num = k.transpose() * &phi;
        let den = &psi * (phi.transpose() * &phi);
        for (p, (a, b)) in psi.iter_mut().zip(num.iter().zip(den.iter())) {
            if *b > 0.0 {
                *p *= a / b;
            }
        }
        let num = k * &psi;
        let den = &phi * (psi.transpose() * &psi);
        for (p, (a, b)) in phi.iter_mut().zip(num.iter().zip(den.iter())) {
            if *b > 0.0 {
                *p *= a / b;
            }
        }
        trace.push(strain(k, &phi, &psi));
    }
    let st = *trace.last().unwrap();
    Ok(AmdsResult { phi, psi, strain: st, trace })
}
