use nalgebra::DMatrix;

use super::kernel_weights;
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::points::Dataset;

/// Local centerless classifier. For each class k,
/// δ_k = −Σ_{i∈k} w_i d(x*, x_i) / W_k, plus Σ_{i,j∈k} w_i w_j d(x_i, x_j) / W_k²
/// when `with_dispersion` is set, with w_i = K(x*, x_i) and W_k the class
/// weight. Classes with no weight score −∞.
pub fn local_centerless_classify(
    k: &Kernel,
    d: &dyn Fn(&[f64], &[f64]) -> f64,
    data: &Dataset,
    query: &[f64],
    with_dispersion: bool,
) -> Result<(usize, Vec<f64>)> {
    let labels = data.labels()?;
    let c = data.n_classes()?;
    let w = kernel_weights(k, &data.x, query)?;
    let mut num = vec![0.0; c];
    let mut den = vec![0.0; c];
    for (i, xi) in data.x.rows().enumerate() {
        if w[i] != 0.0 {
            num[labels[i]] += w[i] * d(query, xi);
            den[labels[i]] += w[i];
        }
    }
    let mut delta: Vec<f64> = (0..c).map(|k| if den[k] > 0.0 { -num[k] / den[k] } else { f64::NEG_INFINITY }).collect();
    if with_dispersion {
        let mut disp = vec![0.0; c];
        for (i, xi) in data.x.rows().enumerate() {
            if w[i] == 0.0 {
                continue;
            }
            for (j, xj) in data.x.rows().enumerate() {
                if labels[j] == labels[i] && w[j] != 0.0 {
                    disp[labels[i]] += w[i] * w[j] * d(xi, xj);
                }
            }
        }
        for k in 0..c {
            if den[k] > 0.0 {
                delta[k] += disp[k] / (den[k] * den[k]);
            }
        }
    }
    if delta.iter().all(|v| *v == f64::NEG_INFINITY) {
        return Err(Error::EmptyNeighborhood { index: 0 });
    }
    let mut best = 0;
    for (k, v) in delta.iter().enumerate() {
        if *v > delta[best] {
            best = k;
        }
    }
    Ok((best, delta))
}

/// One soft step of the lazy centerless transformation:
/// softmax(−((K∘D)R) ⊘ (KR)) row-wise. Entries with zero denominator get zero
/// probability; a row with no valid entry comes back all zeros.
pub fn centerless_lazy_step(k: &DMatrix<f64>, d: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if k.shape() != d.shape() || k.ncols() != r.nrows() {
        return Err(Error::shape("K and D must share a shape whose columns match R's rows"));
    }
    let num = k.component_mul(d) * r;
    let den = k * r;
    let mut out = DMatrix::zeros(num.nrows(), num.ncols());
    for i in 0..num.nrows() {
        let logits: Vec<f64> =
            (0..num.ncols()).map(|c| if den[(i, c)] > 0.0 { -num[(i, c)] / den[(i, c)] } else { f64::NEG_INFINITY }).collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            continue;
        }
        let e: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let s: f64 = e.iter().sum();
        for c in 0..num.ncols() {
            out[(i, c)] = e[c] / s;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sq_dist;
    use crate::points::PointSet;

    #[test]
    fn dirac_at_sample() {
        let x = PointSet::from_scalars(&[0.0, 1.0]).unwrap();
        let data = Dataset::classification(x, vec![0, 1]).unwrap();
        let (c, delta) = local_centerless_classify(&Kernel::dirac(), &sq_dist, &data, &[0.0], false).unwrap();
        assert_eq!(c, 0);
        assert_eq!(delta[0], 0.0);
        assert_eq!(delta[1], f64::NEG_INFINITY);
    }

    #[test]
    fn nearer_singleton_wins() {
        let x = PointSet::from_scalars(&[1.0, -3.0]).unwrap();
        let data = Dataset::classification(x, vec![1, 0]).unwrap();
        let d = |a: &[f64], b: &[f64]| (a[0] - b[0]).abs();
        let (c, _) = local_centerless_classify(&Kernel::uniform(), &d, &data, &[0.0], false).unwrap();
        assert_eq!(c, 1);
    }

    #[test]
    fn lazy_rows_are_distributions() {
        let k = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let d = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let out = centerless_lazy_step(&k, &d, &r).unwrap();
        for i in 0..2 {
            assert!((out.row(i).sum() - 1.0).abs() < 1e-12);
        }
        assert!(out[(0, 0)] > out[(0, 1)]);
    }
}
