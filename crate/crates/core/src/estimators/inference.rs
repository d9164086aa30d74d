use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::points::Dataset;

/// Precomputed sums for a factorized kernel K(x, y) = φ(x)·ψ(y).
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceRules {
    /// Ψᵀy, d×r.
    pub weighted_value_sum: DMatrix<f64>,
    /// Ψᵀ1, length d.
    pub weight_sum: Vec<f64>,
}

pub fn inference_precompute(psi: &dyn Fn(&[f64]) -> Vec<f64>, data: &Dataset) -> Result<InferenceRules> {
    let y = data.real_targets()?;
    let mut d = None;
    let mut wv = DMatrix::zeros(0, 0);
    let mut ws = Vec::new();
    for (xi, yi) in data.x.rows().zip(y.rows()) {
        let f = psi(xi);
        let dim = *d.get_or_insert_with(|| {
            wv = DMatrix::zeros(f.len(), y.dim());
            ws = vec![0.0; f.len()];
            f.len()
        });
        if f.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: f.len() });
        }
        for (a, fa) in f.iter().enumerate() {
            ws[a] += fa;
            for (b, yb) in yi.iter().enumerate() {
                wv[(a, b)] += fa * yb;
            }
        }
    }
    Ok(InferenceRules { weighted_value_sum: wv, weight_sum: ws })
}

/// (φ(x*)·Ψᵀy) / (φ(x*)·Ψᵀ1).
pub fn inference_predict(phi: &dyn Fn(&[f64]) -> Vec<f64>, rules: &InferenceRules, query: &[f64]) -> Result<Vec<f64>> {
    let f = phi(query);
    if f.len() != rules.weight_sum.len() {
        return Err(Error::DimensionMismatch { expected: rules.weight_sum.len(), found: f.len() });
    }
    let den = dot(&f, &rules.weight_sum);
    if den == 0.0 || !den.is_finite() {
        return Err(Error::ZeroDenominator);
    }
    let r = rules.weighted_value_sum.ncols();
    Ok((0..r).map(|b| f.iter().enumerate().map(|(a, fa)| fa * rules.weighted_value_sum[(a, b)]).sum::<f64>() / den).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::PointSet;

    #[test]
    fn one_hot_features_reproduce_samples() {
        let x = PointSet::from_scalars(&[0.0, 1.0, 2.0]).unwrap();
        let d = Dataset::regression(x, vec![5.0, -1.0, 2.0]).unwrap();
        let onehot = |x: &[f64]| {
            let mut v = vec![0.0; 3];
            v[x[0] as usize] = 1.0;
            v
        };
        let rules = inference_precompute(&onehot, &d).unwrap();
        assert_eq!(inference_predict(&onehot, &rules, &[1.0]).unwrap(), vec![-1.0]);
        let ones = |_: &[f64]| vec![1.0];
        let rules = inference_precompute(&ones, &d).unwrap();
        assert_eq!(inference_predict(&ones, &rules, &[7.0]).unwrap(), vec![2.0]);
        let zero = |_: &[f64]| vec![0.0];
        assert_eq!(inference_predict(&zero, &rules, &[7.0]), Err(Error::ZeroDenominator));
    }
}
