use crate::error::{Error, Result};
use crate::linalg::dist;
use crate::points::PointSet;

#[derive(Debug, Clone, PartialEq)]
pub struct NnShiftResult {
    /// Seed position in the seed list, or −1 when never reached.
    pub labels: Vec<i64>,
    /// (parent, child) links of the propagation forest.
    pub edges: Vec<(usize, usize)>,
    /// Sweeps that labeled at least one point.
    pub sweeps: usize,
}

/// Nearest-neighbor shift: each sweep, every unlabeled point adopts the label
/// of its nearest point labeled in an earlier sweep, provided it lies closer
/// than δ (ties to the lower index).
pub fn nn_shift(x: &PointSet, seeds: &[usize], delta: f64) -> Result<NnShiftResult> {
    if seeds.is_empty() {
        return Err(Error::invalid("seed set must be non-empty"));
    }
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("link radius must be positive, got {delta}")));
    }
    let n = x.len();
    let mut labels = vec![-1i64; n];
    for (s, &i) in seeds.iter().enumerate() {
        if i >= n {
            return Err(Error::invalid(format!("seed index {i} out of range")));
        }
        if labels[i] < 0 {
            labels[i] = s as i64;
        }
    }
    let mut edges = Vec::new();
    let mut sweeps = 0;
    loop {
        let snapshot = labels.clone();
        let mut changed = false;
        for i in 0..n {
            if snapshot[i] >= 0 {
                continue;
            }
            let mut best: Option<(f64, usize)> = None;
            for j in 0..n {
                if snapshot[j] < 0 {
                    continue;
                }
                let d = dist(x.row(i), x.row(j));
                if d < delta && best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, j));
                }
            }
            if let Some((_, j)) = best {
                labels[i] = snapshot[j];
                edges.push((j, i));
                changed = true;
            }
        }
        if !changed {
            break;
        }
        sweeps += 1;
    }
    Ok(NnShiftResult { labels, edges, sweeps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_propagation() {
        let x = PointSet::from_scalars(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        let r = nn_shift(&x, &[0], 1.5).unwrap();
        assert_eq!(r.labels, vec![0, 0, 0, 0]);
        assert_eq!(r.sweeps, 3);
        assert_eq!(r.edges, vec![(0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn all_seeds_and_unreachable() {
        let x = PointSet::from_scalars(&[0.0, 1.0, 2.0]).unwrap();
        let all = nn_shift(&x, &[0, 1, 2], 1.5).unwrap();
        assert_eq!(all.labels, vec![0, 1, 2]);
        assert!(all.edges.is_empty());
        let none = nn_shift(&x, &[1], 0.5).unwrap();
        assert_eq!(none.labels, vec![-1, 0, -1]);
    }
}
