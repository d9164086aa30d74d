use super::{extract_clusters, relative_to_diagonal, ShiftResult};
use crate::error::{Error, Result};
use crate::estimators::local_pca;
use crate::kernel::Kernel;
use crate::linalg::{dist, sq_dist};
use crate::par;
use crate::points::PointSet;

/// PC-shift: every point moves toward its reconstruction by the local PCA
/// fitted at its current position (reference set X fixed),
/// q ← q + α(μ_q + V_qV_qᵀ(q − μ_q) − q).
pub fn pc_shift(k: &Kernel, x: &PointSet, r: usize, alpha: f64, tol: f64, max_iter: usize) -> Result<ShiftResult> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    let n = x.len();
    let runs = par::try_map_range(n, |i| {
        let mut q = x.row(i).to_vec();
        let mut traj = vec![q.clone()];
        let mut iters = 0;
        loop {
            let target = local_pca(k, x, &q, r)?.project(&q);
            if dist(&target, &q) < tol {
                return Ok((traj, iters, true));
            }
            if iters == max_iter {
                return Ok((traj, iters, false));
            }
            q = q.iter().zip(&target).map(|(a, b)| a + alpha * (b - a)).collect();
            iters += 1;
            traj.push(q.clone());
        }
    })?;
    let mut trajectories = Vec::with_capacity(n);
    let mut iterations = Vec::with_capacity(n);
    let mut flags = Vec::with_capacity(n);
    for (t, it, c) in runs {
        trajectories.push(t);
        iterations.push(it);
        flags.push(c);
    }
    let finals: Vec<Vec<f64>> = trajectories.iter().map(|t: &Vec<Vec<f64>>| t.last().unwrap().clone()).collect();
    let converged = PointSet::from_rows(&finals)?;
    let (labels, centers) = extract_clusters(&converged, relative_to_diagonal(x, 1e-3))?;
    Ok(ShiftResult { trajectories, converged, labels, centers, iterations, converged_flags: flags, frozen: vec![false; n] })
}

/// Σ_q ‖q − R_q(q)‖²: squared distance of each point to the local subspace
/// fitted at that point.
pub fn pc_shift_objective(k: &Kernel, x: &PointSet, points: &PointSet, r: usize) -> Result<f64> {
    let parts = par::try_map_range(points.len(), |i| {
        let q = points.row(i);
        Ok(sq_dist(q, &local_pca(k, x, q, r)?.project(q)))
    })?;
    Ok(parts.iter().sum())
}
