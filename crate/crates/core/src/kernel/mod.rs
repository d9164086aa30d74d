//! Localization kernels and their algebra.
//!
//! Built-in kernels are unnormalized (a Gaussian peaks at 1); constants are
//! absorbed by row normalization downstream. Density estimation applies its
//! own normalization, see [`crate::density::kde`].

mod matrix;

pub use matrix::{
    filter_solve, gram, laplacian_of, normalize_rows, smoothing_norm, KernelMatrix, LaplacianView, Provenance, StochasticMatrix,
};

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{dist, dot, sq_dist};
use crate::points::PointSet;

/// Feature map used by factorized kernels and inference rules.
pub type FeatureMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// How query and key features are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Dot,
    ExpDot,
}

/// Positional factor of a temporal kernel.
#[derive(Clone)]
pub enum PositionEncoding {
    None,
    /// Keep only pairs with |t - s| < δ.
    Window(f64),
    /// Classic additive encoding, base 10 000, added to tokens before the static kernel.
    Sinusoidal,
    /// Multiply by a one-dimensional kernel evaluated on the two times.
    RelativeFactor(Kernel),
}

impl fmt::Debug for PositionEncoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PositionEncoding::None => write!(f, "none"),
            PositionEncoding::Window(d) => write!(f, "window({d})"),
            PositionEncoding::Sinusoidal => write!(f, "sinusoidal"),
            PositionEncoding::RelativeFactor(k) => write!(f, "relative({k:?})"),
        }
    }
}

/// Sinusoidal position vector of length `p` at time `t`:
/// entry 2i is sin(t / 10000^(2i/p)), entry 2i+1 is cos of the same angle.
pub fn sinusoidal_encoding(t: f64, p: usize) -> Vec<f64> {
    (0..p)
        .map(|j| {
            let i = (j / 2) as f64;
            let angle = t / 10000f64.powf(2.0 * i / p as f64);
            if j % 2 == 0 {
                angle.sin()
            } else {
                angle.cos()
            }
        })
        .collect()
}

enum Kind {
    Gaussian { h: f64 },
    Epanechnikov { h: f64 },
    Neighborhood { eps: f64 },
    Uniform,
    Dirac,
    Linear,
    Knn { k: usize, reference: Arc<PointSet> },
    Feature { phi: FeatureMap, psi: FeatureMap, relation: Relation, label: String },
    Concrete { matrix: Arc<DMatrix<f64>> },
    Dual(Kernel),
    Product { left: Kernel, right: Kernel, anchors: Arc<PointSet> },
    Power { base: Kernel, n: u32, anchors: Arc<PointSet>, anchor_gram: DMatrix<f64> },
    Regularized { base: Kernel, alpha: f64 },
    Hollow { base: Kernel, eps0: f64 },
    Multi { weights: Vec<f64>, parts: Vec<Kernel> },
    Difference { a: Kernel, b: Kernel },
    SelfLocal { kx: Kernel, ky: Kernel, x_dim: usize },
    Temporal { base: Kernel, encoding: PositionEncoding, causal: bool },
}

/// An immutable kernel evaluator, cheap to clone and share across threads.
#[derive(Clone)]
pub struct Kernel(Arc<Kind>);

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn same_dim(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() == y.len() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: x.len(), found: y.len() })
    }
}

fn concrete_index(x: &[f64], n: usize) -> Result<usize> {
    if x.len() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: x.len() });
    }
    let v = x[0];
    if v.fract() != 0.0 || v < 0.0 || v >= n as f64 {
        return Err(Error::DomainError(format!("{v} is not an index in 0..{n}")));
    }
    Ok(v as usize)
}

impl Kernel {
    fn wrap(kind: Kind) -> Self {
        Kernel(Arc::new(kind))
    }

    /// exp(-|x-y|^2 / (2h^2)).
    pub fn gaussian(h: f64) -> Result<Self> {
        positive("bandwidth", h)?;
        Ok(Self::wrap(Kind::Gaussian { h }))
    }

    /// 0.75 (1 - t^2)_+ with t = |x-y| / h.
    pub fn epanechnikov(h: f64) -> Result<Self> {
        positive("bandwidth", h)?;
        Ok(Self::wrap(Kind::Epanechnikov { h }))
    }

    /// Indicator of |x-y| < eps.
    pub fn neighborhood(eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::invalid(format!("radius must be positive, got {eps}")));
        }
        Ok(Self::wrap(Kind::Neighborhood { eps }))
    }

    /// Constant 1.
    pub fn uniform() -> Self {
        Self::wrap(Kind::Uniform)
    }

    /// 1 when x == y exactly, else 0.
    pub fn dirac() -> Self {
        Self::wrap(Kind::Dirac)
    }

    /// x · y. Not a localization kernel in general (can be negative); used by
    /// the Hopfield form of mode shift.
    pub fn linear() -> Self {
        Self::wrap(Kind::Linear)
    }

    /// Empirical k-nearest-neighbor kernel over `reference`: K(x, y) = 1 when
    /// y is one of the k reference points nearest to x (distance ties broken
    /// by ascending index).
    pub fn knn(k: usize, reference: PointSet) -> Result<Self> {
        if k == 0 || k > reference.len() {
            return Err(Error::invalid(format!("neighbor count {k} outside 1..={}", reference.len())));
        }
        Ok(Self::wrap(Kind::Knn { k, reference: Arc::new(reference) }))
    }

    pub fn feature(phi: FeatureMap, psi: FeatureMap, relation: Relation, label: &str) -> Self {
        Self::wrap(Kind::Feature { phi, psi, relation, label: label.to_string() })
    }

    /// Kernel over the finite domain {0, .., n-1} given by a matrix; points are
    /// one-dimensional integer indices.
    pub fn concrete(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("concrete kernel matrix must be finite"));
        }
        Ok(Self::wrap(Kind::Concrete { matrix: Arc::new(matrix) }))
    }

    /// K*(x, y) = K(y, x).
    pub fn dual(&self) -> Self {
        Self::wrap(Kind::Dual(self.clone()))
    }

    /// (K' K)(x, y) = sum_z K'(x, z) K(z, y). Concrete operands compose as a
    /// matrix product; anything else needs an anchor set for z.
    pub fn product(left: &Kernel, right: &Kernel, anchors: Option<&PointSet>) -> Result<Self> {
        if let (Kind::Concrete { matrix: a }, Kind::Concrete { matrix: b }) = (&*left.0, &*right.0) {
            if a.ncols() != b.nrows() {
                return Err(Error::UnsupportedComposition(format!(
                    "cannot compose {}x{} with {}x{}",
                    a.nrows(),
                    a.ncols(),
                    b.nrows(),
                    b.ncols()
                )));
            }
            return Self::concrete(&**a * &**b);
        }
        let anchors = anchors.ok_or_else(|| Error::invalid("product kernel needs an anchor set"))?;
        Ok(Self::wrap(Kind::Product { left: left.clone(), right: right.clone(), anchors: Arc::new(anchors.clone()) }))
    }

    /// n-fold product of a kernel with itself.
    pub fn power(&self, n: u32, anchors: Option<&PointSet>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("power must be at least 1"));
        }
        if let Kind::Concrete { matrix } = &*self.0 {
            if matrix.nrows() != matrix.ncols() {
                return Err(Error::UnsupportedComposition(format!(
                    "power of a non-square {}x{} concrete kernel",
                    matrix.nrows(),
                    matrix.ncols()
                )));
            }
            let mut acc = (**matrix).clone();
            for _ in 1..n {
                acc = &acc * &**matrix;
            }
            return Self::concrete(acc);
        }
        if n == 1 {
            return Ok(self.clone());
        }
        let anchors = anchors.ok_or_else(|| Error::invalid("kernel power needs an anchor set"))?;
        let anchor_gram = gram(self, anchors, anchors)?.values;
        Ok(Self::wrap(Kind::Power { base: self.clone(), n, anchors: Arc::new(anchors.clone()), anchor_gram }))
    }

    /// alpha K + (1 - alpha) delta.
    pub fn regularized(&self, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::invalid(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        Ok(Self::wrap(Kind::Regularized { base: self.clone(), alpha }))
    }

    /// Zeroes pairs closer than eps0 and exact self-pairs.
    pub fn hollow(&self, eps0: f64) -> Result<Self> {
        if !(eps0 >= 0.0) {
            return Err(Error::invalid(format!("hollow radius must be non-negative, got {eps0}")));
        }
        Ok(Self::wrap(Kind::Hollow { base: self.clone(), eps0 }))
    }

    pub fn multi(weights: Vec<f64>, parts: Vec<Kernel>) -> Result<Self> {
        if weights.len() != parts.len() || parts.is_empty() {
            return Err(Error::invalid("multi-kernel needs one weight per part"));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("multi-kernel weights must be non-negative"));
        }
        Ok(Self::wrap(Kind::Multi { weights, parts }))
    }

    /// K1 - K2, flagged as desmoothing.
    pub fn difference(a: &Kernel, b: &Kernel) -> Self {
        Self::wrap(Kind::Difference { a: a.clone(), b: b.clone() })
    }

    /// Separable kernel on joint points laid out as [x (x_dim coords), y (rest)]:
    /// K((x,y),(x',y')) = kx(x,x') ky(y,y').
    pub fn self_local(kx: &Kernel, ky: &Kernel, x_dim: usize) -> Result<Self> {
        if x_dim == 0 {
            return Err(Error::invalid("x block must have at least one coordinate"));
        }
        Ok(Self::wrap(Kind::SelfLocal { kx: kx.clone(), ky: ky.clone(), x_dim }))
    }

    /// Temporal kernel on points laid out as [token coords, time].
    pub fn temporal(base: &Kernel, encoding: PositionEncoding, causal: bool) -> Result<Self> {
        if let PositionEncoding::Window(d) = encoding {
            positive("window", d)?;
        }
        Ok(Self::wrap(Kind::Temporal { base: base.clone(), encoding, causal }))
    }

    /// Factors of a separable self kernel, if this is one.
    pub fn self_factors(&self) -> Option<(&Kernel, &Kernel, usize)> {
        match &*self.0 {
            Kind::SelfLocal { kx, ky, x_dim } => Some((kx, ky, *x_dim)),
            _ => None,
        }
    }

    /// Bandwidth of a Gaussian or Epanechnikov kernel.
    pub fn bandwidth(&self) -> Option<f64> {
        match &*self.0 {
            Kind::Gaussian { h } | Kind::Epanechnikov { h } => Some(*h),
            _ => None,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(&*self.0, Kind::Gaussian { .. })
    }

    pub fn is_epanechnikov(&self) -> bool {
        matches!(&*self.0, Kind::Epanechnikov { .. })
    }

    /// True when the kernel may produce negative weights by construction.
    pub fn is_desmoothing(&self) -> bool {
        match &*self.0 {
            Kind::Difference { .. } => true,
            Kind::Dual(b)
            | Kind::Regularized { base: b, .. }
            | Kind::Hollow { base: b, .. }
            | Kind::Power { base: b, .. }
            | Kind::Temporal { base: b, .. } => b.is_desmoothing(),
            Kind::Product { left, right, .. } => left.is_desmoothing() || right.is_desmoothing(),
            Kind::Multi { parts, .. } => parts.iter().any(Kernel::is_desmoothing),
            Kind::SelfLocal { kx, ky, .. } => kx.is_desmoothing() || ky.is_desmoothing(),
            _ => false,
        }
    }

    /// Short identifier used in kernel-matrix provenance.
    pub fn describe(&self) -> String {
        match &*self.0 {
            Kind::Gaussian { h } => format!("gaussian(h={h})"),
            Kind::Epanechnikov { h } => format!("epanechnikov(h={h})"),
            Kind::Neighborhood { eps } => format!("neighborhood(eps={eps})"),
            Kind::Uniform => "uniform".into(),
            Kind::Dirac => "dirac".into(),
            Kind::Linear => "linear".into(),
            Kind::Knn { k, reference } => format!("knn(k={k}, n={})", reference.len()),
            Kind::Feature { label, relation, .. } => format!("feature({label}, {relation:?})"),
            Kind::Concrete { matrix } => format!("concrete({}x{})", matrix.nrows(), matrix.ncols()),
            Kind::Dual(b) => format!("dual({})", b.describe()),
            Kind::Product { left, right, .. } => {
                format!("product({}, {})", left.describe(), right.describe())
            }
            Kind::Power { base, n, .. } => format!("power({}, {n})", base.describe()),
            Kind::Regularized { base, alpha } => {
                format!("regularized({}, alpha={alpha})", base.describe())
            }
            Kind::Hollow { base, eps0 } => format!("hollow({}, eps0={eps0})", base.describe()),
            Kind::Multi { weights, parts } => {
                let inner: Vec<String> = weights.iter().zip(parts).map(|(w, k)| format!("{w}*{}", k.describe())).collect();
                format!("multi({})", inner.join(" + "))
            }
            Kind::Difference { a, b } => format!("difference({}, {})", a.describe(), b.describe()),
            Kind::SelfLocal { kx, ky, .. } => format!("self({}, {})", kx.describe(), ky.describe()),
            Kind::Temporal { base, encoding, causal } => {
                format!("temporal({}, {encoding:?}, causal={causal})", base.describe())
            }
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match &*self.0 {
            Kind::Gaussian { h } => {
                same_dim(x, y)?;
                Ok((-sq_dist(x, y) / (2.0 * h * h)).exp())
            }
            Kind::Epanechnikov { h } => {
                same_dim(x, y)?;
                let t2 = sq_dist(x, y) / (h * h);
                Ok(if t2 < 1.0 { 0.75 * (1.0 - t2) } else { 0.0 })
            }
            Kind::Neighborhood { eps } => {
                same_dim(x, y)?;
                Ok(if dist(x, y) < *eps { 1.0 } else { 0.0 })
            }
            Kind::Uniform => {
                same_dim(x, y)?;
                Ok(1.0)
            }
            Kind::Dirac => {
                same_dim(x, y)?;
                Ok(if x == y { 1.0 } else { 0.0 })
            }
            Kind::Linear => {
                same_dim(x, y)?;
                Ok(dot(x, y))
            }
            Kind::Knn { k, reference } => {
                same_dim(x, y)?;
                same_dim(x, reference.row(0))?;
                let mut order: Vec<(f64, usize)> = reference.rows().enumerate().map(|(i, r)| (sq_dist(x, r), i)).collect();
                order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let hit = order[..*k].iter().any(|&(_, i)| reference.row(i) == y);
                Ok(if hit { 1.0 } else { 0.0 })
            }
            Kind::Feature { phi, psi, relation, .. } => {
                let a = phi(x);
                let b = psi(y);
                same_dim(&a, &b)?;
                let s = dot(&a, &b);
                Ok(match relation {
                    Relation::Dot => s,
                    Relation::ExpDot => s.exp(),
                })
            }
            Kind::Concrete { matrix } => {
                let i = concrete_index(x, matrix.nrows())?;
                let j = concrete_index(y, matrix.ncols())?;
                Ok(matrix[(i, j)])
            }
            Kind::Dual(b) => b.eval(y, x),
            Kind::Product { left, right, anchors } => {
                let mut s = 0.0;
                for z in anchors.rows() {
                    let a = left.eval(x, z)?;
                    if a != 0.0 {
                        s += a * right.eval(z, y)?;
                    }
                }
                Ok(s)
            }
            Kind::Power { base, n, anchors, anchor_gram } => {
                let m = anchors.len();
                let mut v: Vec<f64> = anchors.rows().map(|z| base.eval(x, z)).collect::<Result<_>>()?;
                for _ in 0..(*n - 2) {
                    let mut next = vec![0.0; m];
                    for (j, vj) in v.iter().enumerate() {
                        if *vj != 0.0 {
                            for (l, nl) in next.iter_mut().enumerate() {
                                *nl += vj * anchor_gram[(j, l)];
                            }
                        }
                    }
                    v = next;
                }
                let mut s = 0.0;
                for (j, z) in anchors.rows().enumerate() {
                    if v[j] != 0.0 {
                        s += v[j] * base.eval(z, y)?;
                    }
                }
                Ok(s)
            }
            Kind::Regularized { base, alpha } => {
                let delta = if x == y { 1.0 } else { 0.0 };
                let k = if *alpha == 0.0 {
                    same_dim(x, y)?;
                    0.0
                } else {
                    base.eval(x, y)?
                };
                Ok(alpha * k + (1.0 - alpha) * delta)
            }
            Kind::Hollow { base, eps0 } => {
                same_dim(x, y)?;
                if x == y || dist(x, y) < *eps0 {
                    Ok(0.0)
                } else {
                    base.eval(x, y)
                }
            }
            Kind::Multi { weights, parts } => {
                let mut s = 0.0;
                for (w, k) in weights.iter().zip(parts) {
                    s += w * k.eval(x, y)?;
                }
                Ok(s)
            }
            Kind::Difference { a, b } => Ok(a.eval(x, y)? - b.eval(x, y)?),
            Kind::SelfLocal { kx, ky, x_dim } => {
                same_dim(x, y)?;
                if x.len() <= *x_dim {
                    return Err(Error::DimensionMismatch { expected: x_dim + 1, found: x.len() });
                }
                let (xa, ya) = x.split_at(*x_dim);
                let (xb, yb) = y.split_at(*x_dim);
                let kxv = kx.eval(xa, xb)?;
                if kxv == 0.0 {
                    return Ok(0.0);
                }
                Ok(kxv * ky.eval(ya, yb)?)
            }
            Kind::Temporal { base, encoding, causal } => {
                same_dim(x, y)?;
                if x.len() < 2 {
                    return Err(Error::DimensionMismatch { expected: 2, found: x.len() });
                }
                let p = x.len() - 1;
                let (t, s) = (x[p], y[p]);
                if *causal && s > t {
                    return Ok(0.0);
                }
                match encoding {
                    PositionEncoding::None => base.eval(&x[..p], &y[..p]),
                    PositionEncoding::Window(d) => {
                        if (t - s).abs() < *d {
                            base.eval(&x[..p], &y[..p])
                        } else {
                            Ok(0.0)
                        }
                    }
                    PositionEncoding::Sinusoidal => {
                        let xe: Vec<f64> = x[..p].iter().zip(sinusoidal_encoding(t, p)).map(|(a, b)| a + b).collect();
                        let ye: Vec<f64> = y[..p].iter().zip(sinusoidal_encoding(s, p)).map(|(a, b)| a + b).collect();
                        base.eval(&xe, &ye)
                    }
                    PositionEncoding::RelativeFactor(k2) => {
                        let a = base.eval(&x[..p], &y[..p])?;
                        if a == 0.0 {
                            return Ok(0.0);
                        }
                        Ok(a * k2.eval(&[t], &[s])?)
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn epanechnikov_profile() {
        let k = Kernel::epanechnikov(1.0).unwrap();
        assert_eq!(k.eval(&[0.0], &[0.0]).unwrap(), 0.75);
        assert_eq!(k.eval(&[0.0], &[1.5]).unwrap(), 0.0);
        assert_relative_eq!(k.eval(&[0.0], &[0.5]).unwrap(), 0.5625, epsilon = 1e-15);
        assert!(Kernel::epanechnikov(-1.0).is_err());
    }

    #[test]
    fn gaussian_values() {
        let k = Kernel::gaussian(1.0).unwrap();
        assert_eq!(k.eval(&[3.0, -1.0], &[3.0, -1.0]).unwrap(), 1.0);
        assert_relative_eq!(k.eval(&[0.0], &[2.0]).unwrap(), (-2.0f64).exp(), epsilon = 1e-15);
        assert!(matches!(k.eval(&[0.0], &[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn multi_of_identical_parts() {
        let g = Kernel::gaussian(1.0).unwrap();
        let m = Kernel::multi(vec![0.5, 0.5], vec![g.clone(), g.clone()]).unwrap();
        for (x, y) in [(0.0, 0.3), (1.0, -2.0), (4.0, 4.0)] {
            assert_relative_eq!(m.eval(&[x], &[y]).unwrap(), g.eval(&[x], &[y]).unwrap(), epsilon = 1e-15);
        }
        assert!(Kernel::multi(vec![-0.1, 1.1], vec![g.clone(), g]).is_err());
    }

    #[test]
    fn regularized_endpoints() {
        let g = Kernel::gaussian(1.0).unwrap();
        let same = g.regularized(1.0).unwrap();
        assert_eq!(same.eval(&[0.0], &[0.5]).unwrap(), g.eval(&[0.0], &[0.5]).unwrap());
        let dirac = g.regularized(0.0).unwrap();
        assert_eq!(dirac.eval(&[0.2], &[0.2]).unwrap(), 1.0);
        assert_eq!(dirac.eval(&[0.2], &[0.3]).unwrap(), 0.0);
        assert!(g.regularized(1.5).is_err());
    }

    #[test]
    fn difference_of_gaussians_vanishes_at_zero() {
        let dog = Kernel::difference(&Kernel::gaussian(2.0).unwrap(), &Kernel::gaussian(1.0).unwrap());
        assert_eq!(dog.eval(&[1.0], &[1.0]).unwrap(), 0.0);
        assert!(dog.is_desmoothing());
        assert!(dog.hollow(0.0).unwrap().is_desmoothing());
    }

    #[test]
    fn dual_swaps_arguments() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let k = Kernel::concrete(m).unwrap();
        assert_eq!(k.eval(&[0.0], &[1.0]).unwrap(), 2.0);
        assert_eq!(k.dual().eval(&[0.0], &[1.0]).unwrap(), 3.0);
        assert!(matches!(k.eval(&[2.0], &[0.0]), Err(Error::DomainError(_))));
        assert!(matches!(k.eval(&[0.5], &[0.0]), Err(Error::DomainError(_))));
    }

    #[test]
    fn concrete_power_and_product() {
        let m = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.0, 1.0]);
        let k = Kernel::concrete(m.clone()).unwrap();
        let k2 = k.power(2, None).unwrap();
        let expect = &m * &m;
        assert_eq!(k2.eval(&[0.0], &[1.0]).unwrap(), expect[(0, 1)]);
        let rect = Kernel::concrete(DMatrix::from_element(2, 3, 1.0)).unwrap();
        assert!(matches!(rect.power(2, None), Err(Error::UnsupportedComposition(_))));
        assert!(Kernel::product(&k, &rect, None).is_ok());
        assert!(Kernel::product(&rect, &k, None).is_err());
    }

    #[test]
    fn anchored_power_matches_product_chain() {
        let g = Kernel::gaussian(0.7).unwrap();
        let anchors = PointSet::from_scalars(&[-1.0, 0.0, 0.5, 2.0]).unwrap();
        let p3 = g.power(3, Some(&anchors)).unwrap();
        let p2 = Kernel::product(&g, &g, Some(&anchors)).unwrap();
        let chain = Kernel::product(&p2, &g, Some(&anchors)).unwrap();
        let (x, y) = ([0.3], [1.1]);
        assert_relative_eq!(p3.eval(&x, &y).unwrap(), chain.eval(&x, &y).unwrap(), epsilon = 1e-12);
        assert!(g.power(2, None).is_err());
    }

    #[test]
    fn hollow_zeroes_self_pairs() {
        let h = Kernel::gaussian(1.0).unwrap().hollow(0.0).unwrap();
        assert_eq!(h.eval(&[1.0], &[1.0]).unwrap(), 0.0);
        assert!(h.eval(&[1.0], &[1.2]).unwrap() > 0.0);
        let wide = Kernel::gaussian(1.0).unwrap().hollow(0.5).unwrap();
        assert_eq!(wide.eval(&[1.0], &[1.2]).unwrap(), 0.0);
    }

    #[test]
    fn knn_kernel_breaks_ties_by_index() {
        let reference = PointSet::from_scalars(&[-1.0, 1.0, 5.0]).unwrap();
        let k = Kernel::knn(1, reference).unwrap();
        assert_eq!(k.eval(&[0.0], &[-1.0]).unwrap(), 1.0);
        assert_eq!(k.eval(&[0.0], &[1.0]).unwrap(), 0.0);
        assert!(Kernel::knn(4, PointSet::from_scalars(&[0.0]).unwrap()).is_err());
    }

    #[test]
    fn feature_relations() {
        let phi: FeatureMap = Arc::new(|x: &[f64]| vec![x[0], 1.0]);
        let k = Kernel::feature(phi.clone(), phi.clone(), Relation::Dot, "affine");
        assert_eq!(k.eval(&[2.0], &[3.0]).unwrap(), 7.0);
        let e = Kernel::feature(phi.clone(), phi, Relation::ExpDot, "affine");
        assert_relative_eq!(e.eval(&[0.0], &[0.0]).unwrap(), 1f64.exp(), epsilon = 1e-15);
    }

    #[test]
    fn temporal_causal_and_window() {
        let k = Kernel::temporal(&Kernel::uniform(), PositionEncoding::Window(1.5), true).unwrap();
        assert_eq!(k.eval(&[0.0, 2.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(k.eval(&[0.0, 2.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(k.eval(&[0.0, 1.0], &[0.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn sinusoidal_encoding_at_zero() {
        assert_eq!(sinusoidal_encoding(0.0, 4), vec![0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn self_kernel_factorizes() {
        let kx = Kernel::gaussian(1.0).unwrap();
        let ky = Kernel::gaussian(0.5).unwrap();
        let k = Kernel::self_local(&kx, &ky, 1).unwrap();
        let v = k.eval(&[0.0, 0.0], &[1.0, 0.5]).unwrap();
        assert_relative_eq!(v, kx.eval(&[0.0], &[1.0]).unwrap() * ky.eval(&[0.0], &[0.5]).unwrap(), epsilon = 1e-15);
    }
}
