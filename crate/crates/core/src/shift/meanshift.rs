use super::{extract_clusters, relative_to_diagonal, ShiftResult};
use crate::error::{Error, Result};
use crate::estimators::{kernel_weights, weighted_mean};
use crate::kernel::Kernel;
use crate::linalg::dist;
use crate::par;
use crate::points::PointSet;

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftOptions {
    /// Step damping in (0, 1]; 1 is the plain update.
    pub alpha: f64,
    /// Stop once ‖m_K(q) − q‖ falls below this. Default 1e-8 × bounding diagonal.
    pub tol: Option<f64>,
    pub max_iter: usize,
    /// Replace the reference set by the current iterates after every sweep.
    pub overwrite: bool,
    /// Cluster merge radius. Default 1e-3 × bounding diagonal.
    pub merge_radius: Option<f64>,
}

impl Default for ShiftOptions {
    fn default() -> Self {
        Self { alpha: 1.0, tol: None, max_iter: 500, overwrite: false, merge_radius: None }
    }
}

impl ShiftOptions {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(Error::invalid(format!("tolerance must be positive, got {t}")));
            }
        }
        Ok(())
    }
}

enum Stop {
    Converged,
    Frozen,
    MaxIter,
}

fn shift_one(
    k: &Kernel,
    x: &PointSet,
    start: &[f64],
    alpha: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<Vec<f64>>, usize, Stop)> {
    let mut q = start.to_vec();
    let mut traj = vec![q.clone()];
    let mut iters = 0;
    loop {
        let w = kernel_weights(k, x, &q)?;
        let Some(m) = weighted_mean(&w, x) else {
            return Ok((traj, iters, Stop::Frozen));
        };
        if dist(&m, &q) < tol {
            return Ok((traj, iters, Stop::Converged));
        }
        if iters == max_iter {
            return Ok((traj, iters, Stop::MaxIter));
        }
        q = q.iter().zip(&m).map(|(a, b)| alpha * b + (1.0 - alpha) * a).collect();
        iters += 1;
        traj.push(q.clone());
    }
}

/// Iterates q ← α m_K(q; X) + (1 − α) q for every query.
pub fn mean_shift(k: &Kernel, x: &PointSet, queries: &PointSet, opts: &ShiftOptions) -> Result<ShiftResult> {
    opts.validate()?;
    if queries.dim() != x.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: queries.dim() });
    }
    let tol = opts.tol.unwrap_or_else(|| relative_to_diagonal(x, 1e-8));
    let radius = opts.merge_radius.unwrap_or_else(|| relative_to_diagonal(x, 1e-3));
    let n = queries.len();
    let (trajectories, iterations, converged_flags, frozen) = if opts.overwrite {
        sweep(k, queries, opts.alpha, tol, opts.max_iter)?
    } else {
        let runs = par::try_map_range(n, |i| shift_one(k, x, queries.row(i), opts.alpha, tol, opts.max_iter))?;
        let mut t = Vec::with_capacity(n);
        let mut it = Vec::with_capacity(n);
        let mut c = Vec::with_capacity(n);
        let mut f = Vec::with_capacity(n);
        for (traj, iters, stop) in runs {
            t.push(traj);
            it.push(iters);
            c.push(matches!(stop, Stop::Converged));
            f.push(matches!(stop, Stop::Frozen));
        }
        (t, it, c, f)
    };
    let finals: Vec<Vec<f64>> = trajectories.iter().map(|t| t.last().unwrap().clone()).collect();
    let converged = if finals.is_empty() { PointSet::new(x.dim(), vec![])? } else { PointSet::from_rows(&finals)? };
    let (labels, centers) = extract_clusters(&converged, radius)?;
    Ok(ShiftResult { trajectories, converged, labels, centers, iterations, converged_flags, frozen })
}

type SweepOut = (Vec<Vec<Vec<f64>>>, Vec<usize>, Vec<bool>, Vec<bool>);

/// Synchronous variant: every sweep uses the previous sweep's points as the
/// reference set.
fn sweep(k: &Kernel, start: &PointSet, alpha: f64, tol: f64, max_iter: usize) -> Result<SweepOut> {
    let n = start.len();
    let mut current = start.clone();
    let mut traj: Vec<Vec<Vec<f64>>> = current.rows().map(|r| vec![r.to_vec()]).collect();
    let mut frozen = vec![false; n];
    let mut done = vec![false; n];
    let mut sweeps = 0;
    loop {
        let means = par::try_map_range(n, |i| {
            let w = kernel_weights(k, &current, current.row(i))?;
            Ok(weighted_mean(&w, &current))
        })?;
        let mut moving = false;
        for i in 0..n {
            match &means[i] {
                None => frozen[i] = true,
                Some(m) => {
                    done[i] = dist(m, current.row(i)) < tol;
                    moving |= !done[i];
                }
            }
        }
        if !moving || sweeps == max_iter {
            break;
        }
        let mut next = Vec::with_capacity(n * start.dim());
        for i in 0..n {
            let q = current.row(i);
            match &means[i] {
                Some(m) if !frozen[i] => next.extend(q.iter().zip(m).map(|(a, b)| alpha * b + (1.0 - alpha) * a)),
                _ => next.extend_from_slice(q),
            }
        }
        current = PointSet::new(start.dim(), next)?;
        for i in 0..n {
            traj[i].push(current.row(i).to_vec());
        }
        sweeps += 1;
    }
    Ok((traj, vec![sweeps; n], done, frozen))
}
