use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernel::{gram, normalize_rows, Kernel};
use crate::par;
use crate::points::PointSet;

#[derive(Debug, Clone, PartialEq)]
pub struct MedoidShiftResult {
    /// j*_i = argmin_j (K̃D)_ij.
    pub mapping: Vec<usize>,
    /// Terminal representative reached by following the mapping from i.
    pub representatives: Vec<usize>,
    /// Dense cluster labels in order of first appearance.
    pub labels: Vec<usize>,
}

/// MedoidShift: every point jumps to the sample minimizing the kernel-weighted
/// mean distance; chains are followed to their end and cycles resolved to
/// their smallest index.
pub fn medoid_shift(k: &Kernel, d: &(dyn Fn(&[f64], &[f64]) -> f64 + Sync), x: &PointSet) -> Result<MedoidShiftResult> {
    let n = x.len();
    let kt = normalize_rows(&gram(k, x, x)?)?;
    if let Some(&index) = kt.empty_rows.first() {
        return Err(Error::EmptyNeighborhood { index });
    }
    let rows = par::map_range(n, |i| x.rows().map(|xj| d(x.row(i), xj)).collect::<Vec<f64>>());
    let dm = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let score = &kt.values * dm;
    let mapping: Vec<usize> = (0..n)
        .map(|i| {
            let mut best = 0;
            for j in 1..n {
                if score[(i, j)] < score[(i, best)] {
                    best = j;
                }
            }
            best
        })
        .collect();
    let representatives = resolve(&mapping);
    let labels = densify(&representatives);
    Ok(MedoidShiftResult { mapping, representatives, labels })
}

/// Terminal index of every chain; a cycle resolves to its smallest member.
fn resolve(mapping: &[usize]) -> Vec<usize> {
    let n = mapping.len();
    let mut rep = vec![usize::MAX; n];
    let mut pos = vec![usize::MAX; n];
    for start in 0..n {
        if rep[start] != usize::MAX {
            continue;
        }
        let mut path = Vec::new();
        let mut cur = start;
        let r = loop {
            if rep[cur] != usize::MAX {
                break rep[cur];
            }
            if pos[cur] != usize::MAX {
                break *path[pos[cur]..].iter().min().unwrap();
            }
            pos[cur] = path.len();
            path.push(cur);
            cur = mapping[cur];
        };
        for p in path {
            rep[p] = r;
        }
    }
    rep
}

fn densify(rep: &[usize]) -> Vec<usize> {
    let mut dense = vec![usize::MAX; rep.len()];
    let mut count = 0;
    rep.iter()
        .map(|&r| {
            if dense[r] == usize::MAX {
                dense[r] = count;
                count += 1;
            }
            dense[r]
        })
        .collect()
}

/// MedoidShift reapplied to its own representatives, each weighted by the
/// number of points it has absorbed, until no representative moves or
/// `max_rounds` is reached. `mapping` is that of the first pass.
pub fn medoid_shift_iterated(
    k: &Kernel,
    d: &(dyn Fn(&[f64], &[f64]) -> f64 + Sync),
    x: &PointSet,
    max_rounds: usize,
) -> Result<MedoidShiftResult> {
    let first = medoid_shift(k, d, x)?;
    let mut rep = first.representatives.clone();
    for _ in 0..max_rounds {
        let mut modes = rep.clone();
        modes.sort_unstable();
        modes.dedup();
        let m = modes.len();
        if m == 1 {
            break;
        }
        let mass: Vec<f64> = modes.iter().map(|r| rep.iter().filter(|v| *v == r).count() as f64).collect();
        let step = par::try_map_range(m, |a| {
            let w: Vec<f64> = (0..m).map(|c| Ok(mass[c] * k.eval(x.row(modes[a]), x.row(modes[c]))?)).collect::<Result<_>>()?;
            if w.iter().all(|v| *v == 0.0) {
                return Ok(a);
            }
            let mut best = a;
            let mut best_score = f64::INFINITY;
            for b in 0..m {
                let s: f64 = (0..m).map(|c| w[c] * d(x.row(modes[c]), x.row(modes[b]))).sum();
                if s < best_score {
                    best = b;
                    best_score = s;
                }
            }
            Ok(best)
        })?;
        if step.iter().enumerate().all(|(a, b)| a == *b) {
            break;
        }
        let merged = resolve(&step);
        rep = rep.iter().map(|r| modes[merged[modes.binary_search(r).expect("representative is a mode")]]).collect();
    }
    let labels = densify(&rep);
    Ok(MedoidShiftResult { mapping: first.mapping, representatives: rep, labels })
}
