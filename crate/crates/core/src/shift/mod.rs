//! Shift iterations: mean shift, mode shift (Hopfield), medoid shift,
//! nearest-neighbor shift, PC-shift and relaxation labeling.

mod meanshift;
mod medoid;
mod modeshift;
mod nnshift;
mod pcshift;
mod relax;

pub use meanshift::{mean_shift, ShiftOptions};
pub use medoid::{medoid_shift, medoid_shift_iterated, MedoidShiftResult};
pub use modeshift::{mode_shift, ModeShiftResult};
pub use nnshift::{nn_shift, NnShiftResult};
pub use pcshift::{pc_shift, pc_shift_objective};
pub use relax::{kmeans_labels, relaxation_label, RelaxInit, RelaxMode, RelaxResult};

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::dist;
use crate::points::PointSet;

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftResult {
    /// Per query: the starting point followed by every iterate.
    pub trajectories: Vec<Vec<Vec<f64>>>,
    pub converged: PointSet,
    pub labels: Vec<usize>,
    pub centers: PointSet,
    pub iterations: Vec<usize>,
    pub converged_flags: Vec<bool>,
    /// Queries stopped because their neighborhood became empty.
    pub frozen: Vec<bool>,
}

impl ShiftResult {
    pub fn n_clusters(&self) -> usize {
        self.centers.len()
    }

    /// One CSV row per query per recorded step: `query,step,x0,x1,...`.
    pub fn trajectories_csv(&self) -> String {
        let dim = self.converged.dim();
        let mut out = String::from("query,step");
        for j in 0..dim {
            let _ = write!(out, ",x{j}");
        }
        out.push('\n');
        for (q, traj) in self.trajectories.iter().enumerate() {
            for (s, p) in traj.iter().enumerate() {
                let _ = write!(out, "{q},{s}");
                for v in p {
                    let _ = write!(out, ",{v:?}");
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Single-linkage grouping of points closer than `merge_radius`. Labels are
/// numbered in order of first appearance; centers are cluster means.
pub fn extract_clusters(converged: &PointSet, merge_radius: f64) -> Result<(Vec<usize>, PointSet)> {
    if !(merge_radius > 0.0) {
        return Err(Error::invalid(format!("merge radius must be positive, got {merge_radius}")));
    }
    let n = converged.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if dist(converged.row(i), converged.row(j)) < merge_radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut root_label = vec![usize::MAX; n];
    let mut labels = Vec::with_capacity(n);
    let mut count = 0;
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_label[r] == usize::MAX {
            root_label[r] = count;
            count += 1;
        }
        labels.push(root_label[r]);
    }
    let dim = converged.dim();
    let mut sums = vec![0.0; count * dim];
    let mut sizes = vec![0usize; count];
    for (i, &l) in labels.iter().enumerate() {
        sizes[l] += 1;
        for j in 0..dim {
            sums[l * dim + j] += converged.row(i)[j];
        }
    }
    for l in 0..count {
        for j in 0..dim {
            sums[l * dim + j] /= sizes[l] as f64;
        }
    }
    Ok((labels, PointSet::new(dim, sums)?))
}

/// Scale-relative default: `factor` × bounding-box diagonal, with a tiny floor
/// for degenerate (single-location) data.
pub(crate) fn relative_to_diagonal(x: &PointSet, factor: f64) -> f64 {
    let d = x.bounding_diagonal();
    if d > 0.0 {
        factor * d
    } else {
        factor * 1e-4
    }
}
