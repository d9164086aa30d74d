//! Row-major point sets and datasets.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// N points of dimension p stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    data: Vec<f64>,
}

impl PointSet {
    /// Builds a point set from a flat row-major buffer.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("point dimension must be at least 1"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::shape(format!("buffer of length {} is not a multiple of dimension {dim}", data.len())));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite coordinate at point {}", pos / dim)));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(1);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: row.len() });
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    /// One-dimensional points from scalars.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(1, values.to_vec())
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            data.extend(m.row(i).iter().copied());
        }
        Self::new(m.ncols().max(1), data)
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.len(), self.dim, &self.data)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn select(&self, indices: &[usize]) -> PointSet {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        PointSet { dim: self.dim, data }
    }

    /// Appends coordinate columns of `other` to each row.
    pub fn hstack(&self, other: &PointSet) -> Result<PointSet> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: other.len() });
        }
        let dim = self.dim + other.dim;
        let mut data = Vec::with_capacity(self.len() * dim);
        for (a, b) in self.rows().zip(other.rows()) {
            data.extend_from_slice(a);
            data.extend_from_slice(b);
        }
        Ok(PointSet { dim, data })
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for r in self.rows() {
            for (a, b) in m.iter_mut().zip(r) {
                *a += b;
            }
        }
        let n = self.len().max(1) as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    /// Length of the diagonal of the axis-aligned bounding box.
    pub fn bounding_diagonal(&self) -> f64 {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for r in self.rows() {
            for j in 0..self.dim {
                lo[j] = lo[j].min(r[j]);
                hi[j] = hi[j].max(r[j]);
            }
        }
        if self.is_empty() {
            return 0.0;
        }
        lo.iter().zip(&hi).map(|(l, h)| (h - l) * (h - l)).sum::<f64>().sqrt()
    }

    /// Cheap content fingerprint used to label kernel-matrix provenance.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut mix = |x: u64| {
            h ^= x;
            h = h.wrapping_mul(0x100000001b3);
        };
        mix(self.dim as u64);
        for v in &self.data {
            mix(v.to_bits());
        }
        h
    }
}

/// Supervision attached to a design matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Real(Vec<f64>),
    Matrix(PointSet),
    Labels(Vec<usize>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Real(v) => v.len(),
            Targets::Matrix(m) => m.len(),
            Targets::Labels(l) => l.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: PointSet,
    pub targets: Option<Targets>,
}

impl Dataset {
    pub fn new(x: PointSet, targets: Option<Targets>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::invalid("dataset needs at least one point"));
        }
        if let Some(t) = &targets {
            if t.len() != x.len() {
                return Err(Error::DimensionMismatch { expected: x.len(), found: t.len() });
            }
            if let Targets::Real(v) = t {
                if v.iter().any(|y| !y.is_finite()) {
                    return Err(Error::invalid("non-finite target"));
                }
            }
        }
        Ok(Self { x, targets })
    }

    pub fn unsupervised(x: PointSet) -> Result<Self> {
        Self::new(x, None)
    }

    pub fn regression(x: PointSet, y: Vec<f64>) -> Result<Self> {
        Self::new(x, Some(Targets::Real(y)))
    }

    pub fn classification(x: PointSet, labels: Vec<usize>) -> Result<Self> {
        Self::new(x, Some(Targets::Labels(labels)))
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Real targets as an N×r point set (vectors become N×1).
    pub fn real_targets(&self) -> Result<PointSet> {
        match &self.targets {
            Some(Targets::Real(v)) => PointSet::from_scalars(v),
            Some(Targets::Matrix(m)) => Ok(m.clone()),
            _ => Err(Error::invalid("real-valued targets required")),
        }
    }

    pub fn labels(&self) -> Result<&[usize]> {
        match &self.targets {
            Some(Targets::Labels(l)) => Ok(l),
            _ => Err(Error::invalid("label targets required")),
        }
    }

    pub fn n_classes(&self) -> Result<usize> {
        Ok(self.labels()?.iter().max().map_or(0, |m| m + 1))
    }
}
