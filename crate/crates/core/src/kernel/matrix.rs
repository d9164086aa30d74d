use nalgebra::{DMatrix, DVector};

use super::Kernel;
use crate::error::{Error, Result};
use crate::par;
use crate::points::PointSet;

/// Where a kernel matrix came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub kernel: String,
    pub rows: String,
    pub cols: String,
}

impl Provenance {
    fn explicit() -> Self {
        Provenance { kernel: "explicit".into(), rows: "explicit".into(), cols: "explicit".into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub values: DMatrix<f64>,
    pub provenance: Provenance,
    pub desmoothing: bool,
}

impl KernelMatrix {
    /// Wraps explicit non-negative weights.
    pub fn from_values(values: DMatrix<f64>) -> Result<Self> {
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("kernel matrix entries must be finite and non-negative"));
        }
        Ok(Self { values, provenance: Provenance::explicit(), desmoothing: false })
    }

    /// Wraps explicit signed weights, flagged as desmoothing.
    pub fn desmoothing(values: DMatrix<f64>) -> Self {
        Self { values, provenance: Provenance::explicit(), desmoothing: true }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }
}

/// Row-normalized kernel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    pub values: DMatrix<f64>,
    pub degrees: Vec<f64>,
    pub empty_rows: Vec<usize>,
}

impl StochasticMatrix {
    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    /// K̃ Y for an N×r point set Y.
    pub fn apply(&self, y: &PointSet) -> Result<PointSet> {
        if y.len() != self.ncols() {
            return Err(Error::DimensionMismatch { expected: self.ncols(), found: y.len() });
        }
        PointSet::from_matrix(&(&self.values * y.to_matrix()))
    }

    pub fn apply_vec(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.ncols() {
            return Err(Error::DimensionMismatch { expected: self.ncols(), found: f.len() });
        }
        Ok((&self.values * DVector::from_column_slice(f)).iter().copied().collect())
    }

    /// The row-stochastic values viewed as a plain kernel matrix.
    pub fn as_kernel_matrix(&self) -> KernelMatrix {
        KernelMatrix {
            values: self.values.clone(),
            provenance: Provenance { kernel: "normalized".into(), rows: "normalized".into(), cols: "normalized".into() },
            desmoothing: false,
        }
    }
}

/// Laplacian forms of a square kernel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianView {
    pub raw: DMatrix<f64>,
    pub normalized: DMatrix<f64>,
}

/// values[i][j] = k(rows[i], cols[j]), computed in parallel over rows.
pub fn gram(k: &Kernel, rows: &PointSet, cols: &PointSet) -> Result<KernelMatrix> {
    let (n, m) = (rows.len(), cols.len());
    let row_vals = par::try_map_range(n, |i| {
        let xi = rows.row(i);
        cols.rows().map(|c| k.eval(xi, c)).collect::<Result<Vec<f64>>>()
    })?;
    let mut values = DMatrix::zeros(n, m);
    for (i, r) in row_vals.into_iter().enumerate() {
        for (j, v) in r.into_iter().enumerate() {
            values[(i, j)] = v;
        }
    }
    Ok(KernelMatrix {
        values,
        provenance: Provenance {
            kernel: k.describe(),
            rows: format!("points#{:016x}", rows.fingerprint()),
            cols: format!("points#{:016x}", cols.fingerprint()),
        },
        desmoothing: k.is_desmoothing(),
    })
}

/// D⁻¹K. Zero-degree rows are recorded and left as zeros.
pub fn normalize_rows(k: &KernelMatrix) -> Result<StochasticMatrix> {
    if k.desmoothing {
        return Err(Error::DesmoothingInput);
    }
    let (n, m) = k.values.shape();
    if k.values.iter().any(|v| *v < 0.0) {
        return Err(Error::invalid("negative kernel weight in a non-desmoothing matrix"));
    }
    let mut values = k.values.clone();
    let mut degrees = Vec::with_capacity(n);
    let mut empty_rows = Vec::new();
    for i in 0..n {
        let d: f64 = k.values.row(i).iter().sum();
        degrees.push(d);
        if d > 0.0 {
            for j in 0..m {
                values[(i, j)] /= d;
            }
        } else {
            empty_rows.push(i);
        }
    }
    Ok(StochasticMatrix { values, degrees, empty_rows })
}

pub fn laplacian_of(k: &KernelMatrix) -> Result<LaplacianView> {
    let (n, m) = k.values.shape();
    if n != m {
        return Err(Error::NotSquare { rows: n, cols: m });
    }
    let kt = normalize_rows(k)?;
    let raw = DMatrix::from_diagonal(&DVector::from_vec(kt.degrees.clone())) - &k.values;
    let normalized = DMatrix::identity(n, n) - &kt.values;
    Ok(LaplacianView { raw, normalized })
}

/// ‖(I − K̃)^m f‖₂.
pub fn smoothing_norm(kt: &StochasticMatrix, f: &[f64], m: u32) -> Result<f64> {
    let n = kt.nrows();
    if kt.ncols() != n {
        return Err(Error::NotSquare { rows: n, cols: kt.ncols() });
    }
    if f.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: f.len() });
    }
    if m == 0 {
        return Err(Error::invalid("smoothing order must be at least 1"));
    }
    let l = DMatrix::identity(n, n) - &kt.values;
    let mut v = DVector::from_column_slice(f);
    for _ in 0..m {
        v = &l * v;
    }
    Ok(v.norm())
}

/// Minimizer of ‖f − g‖² + λ‖(I − K̃)f‖², from (I + λLᵀL) f = g.
pub fn filter_solve(kt: &StochasticMatrix, g: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let n = kt.nrows();
    if kt.ncols() != n {
        return Err(Error::NotSquare { rows: n, cols: kt.ncols() });
    }
    if g.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: g.len() });
    }
    if !(lambda > 0.0) {
        return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
    }
    let l = DMatrix::identity(n, n) - &kt.values;
    let a = DMatrix::identity(n, n) + lambda * l.transpose() * &l;
    let rhs = DVector::from_column_slice(g);
    let mut f = a.clone().cholesky().ok_or(Error::SingularSystem)?.solve(&rhs);
    // one step of iterative refinement keeps the residual at round-off level
    let r = &rhs - &a * &f;
    if let Some(ch) = a.clone().cholesky() {
        f += ch.solve(&r);
    }
    Ok(f.iter().copied().collect())
}
