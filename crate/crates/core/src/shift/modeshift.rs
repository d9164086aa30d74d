use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::par;
use crate::points::PointSet;

#[derive(Debug, Clone, PartialEq)]
pub struct ModeShiftResult {
    pub patterns: PointSet,
    /// Number of updates that changed the state.
    pub iterations: Vec<usize>,
    pub converged: Vec<bool>,
    /// For queries caught in a period-2 oscillation, the other state of the cycle.
    pub cycle_partner: Vec<Option<Vec<f64>>>,
}

fn check_binary(x: &PointSet, what: &str) -> Result<()> {
    if x.as_slice().iter().any(|v| *v != 1.0 && *v != -1.0) {
        return Err(Error::invalid(format!("{what} entries must be +1 or -1")));
    }
    Ok(())
}

fn update(k: &Kernel, x: &PointSet, q: &[f64]) -> Result<Vec<f64>> {
    let mut s = vec![0.0; q.len()];
    for xi in x.rows() {
        let w = k.eval(q, xi)?;
        if w != 0.0 {
            for (a, v) in s.iter_mut().zip(xi) {
                *a += w * v;
            }
        }
    }
    Ok(s.into_iter().map(|v| if v >= 0.0 { 1.0 } else { -1.0 }).collect())
}

/// Iterates q ← sign(Σ K(q, x_i) x_i) with sign(0) = +1. For a localization
/// kernel this is the sign of the local mean; for the linear kernel it is the
/// Hopfield update sign(Gq) with G = XᵀX.
pub fn mode_shift(k: &Kernel, x: &PointSet, queries: &PointSet, max_iter: usize) -> Result<ModeShiftResult> {
    check_binary(x, "stored pattern")?;
    check_binary(queries, "query")?;
    if x.dim() != queries.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: queries.dim() });
    }
    let runs = par::try_map_range(queries.len(), |i| {
        let mut q = queries.row(i).to_vec();
        let mut prev: Option<Vec<f64>> = None;
        let mut changes = 0;
        for _ in 0..max_iter.max(1) {
            let next = update(k, x, &q)?;
            if next == q {
                return Ok((q, changes, true, None));
            }
            if prev.as_ref() == Some(&next) {
                return Ok((next, changes, false, Some(q)));
            }
            prev = Some(std::mem::replace(&mut q, next));
            changes += 1;
            if changes == max_iter {
                break;
            }
        }
        Ok((q, changes, false, None))
    })?;
    let mut data = Vec::with_capacity(queries.len() * queries.dim());
    let mut iterations = Vec::new();
    let mut converged = Vec::new();
    let mut cycle_partner = Vec::new();
    for (q, it, c, p) in runs {
        data.extend(q);
        iterations.push(it);
        converged.push(c);
        cycle_partner.push(p);
    }
    Ok(ModeShiftResult { patterns: PointSet::new(queries.dim(), data)?, iterations, converged, cycle_partner })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hopfield_examples() {
        let x = PointSet::from_rows(&[[1.0, 1.0, -1.0]]).unwrap();
        let lin = Kernel::linear();
        let r = mode_shift(&lin, &x, &x, 10).unwrap();
        assert_eq!(r.patterns.row(0), &[1.0, 1.0, -1.0]);
        assert_eq!(r.iterations, vec![0]);
        let q = PointSet::from_rows(&[[1.0, 1.0, 1.0]]).unwrap();
        let r = mode_shift(&lin, &x, &q, 10).unwrap();
        assert_eq!(r.patterns.row(0), &[1.0, 1.0, -1.0]);
        assert_eq!(r.iterations, vec![1]);
    }

    #[test]
    fn orthogonal_patterns_are_fixed() {
        let x = PointSet::from_rows(&[[1.0, 1.0, 1.0, 1.0], [1.0, -1.0, 1.0, -1.0]]).unwrap();
        let r = mode_shift(&Kernel::linear(), &x, &x, 10).unwrap();
        assert_eq!(r.patterns, x);
        assert!(r.converged.iter().all(|c| *c));
    }

    #[test]
    fn rejects_non_binary() {
        let x = PointSet::from_rows(&[[1.0, 0.5]]).unwrap();
        assert!(mode_shift(&Kernel::linear(), &x, &x, 3).is_err());
    }
}
