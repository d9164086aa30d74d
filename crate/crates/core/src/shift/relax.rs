use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimators::argmax;
use crate::kernel::{gram, normalize_rows, Kernel};
use crate::linalg::sq_dist;
use crate::points::PointSet;

#[derive(Debug, Clone, PartialEq)]
pub enum RelaxInit {
    Labels { labels: Vec<usize>, n_classes: usize },
    Probabilities(DMatrix<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelaxMode {
    Hard,
    Soft,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxResult {
    pub probabilities: DMatrix<f64>,
    pub labels: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
}

fn one_hot(labels: &[usize], c: usize) -> DMatrix<f64> {
    let mut r = DMatrix::zeros(labels.len(), c);
    for (i, &l) in labels.iter().enumerate() {
        r[(i, l)] = 1.0;
    }
    r
}

fn row_argmax(r: &DMatrix<f64>) -> Vec<usize> {
    (0..r.nrows()).map(|i| argmax(&r.row(i).iter().copied().collect::<Vec<_>>())).collect()
}

/// Relaxation labeling. Soft: R ← K̃R with rows renormalized until
/// ‖ΔR‖∞ < tol. Hard: each label becomes the class with the largest kernel
/// weight sum until no label changes. Rows with zero degree stay as they are.
pub fn relaxation_label(
    k: &Kernel,
    x: &PointSet,
    init: RelaxInit,
    mode: RelaxMode,
    max_iter: usize,
    tol: f64,
) -> Result<RelaxResult> {
    let n = x.len();
    let mut r = match init {
        RelaxInit::Labels { labels, n_classes } => {
            if labels.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: labels.len() });
            }
            if labels.iter().any(|l| *l >= n_classes) {
                return Err(Error::invalid("label exceeds class count"));
            }
            one_hot(&labels, n_classes)
        }
        RelaxInit::Probabilities(p) => {
            if p.nrows() != n {
                return Err(Error::DimensionMismatch { expected: n, found: p.nrows() });
            }
            for i in 0..n {
                let s = p.row(i).sum();
                if p.row(i).iter().any(|v| *v < 0.0) || (s - 1.0).abs() > 1e-9 {
                    return Err(Error::invalid(format!("row {i} is not a probability vector")));
                }
            }
            p
        }
    };
    let g = gram(k, x, x)?;
    let kt = normalize_rows(&g)?;
    let empty: Vec<bool> = (0..n).map(|i| kt.degrees[i] <= 0.0).collect();
    for it in 1..=max_iter {
        let next = match mode {
            RelaxMode::Soft => {
                let mut m = &kt.values * &r;
                for i in 0..n {
                    if empty[i] {
                        m.set_row(i, &r.row(i));
                    } else {
                        let s = m.row(i).sum();
                        m.row_mut(i).scale_mut(1.0 / s);
                    }
                }
                m
            }
            RelaxMode::Hard => {
                let scores = &g.values * &r;
                let mut labels = row_argmax(&r);
                for i in 0..n {
                    if !empty[i] {
                        labels[i] = argmax(&scores.row(i).iter().copied().collect::<Vec<_>>());
                    }
                }
                one_hot(&labels, r.ncols())
            }
        };
        let change = (&next - &r).amax();
        r = next;
        let done = match mode {
            RelaxMode::Soft => change < tol,
            RelaxMode::Hard => change == 0.0,
        };
        if done {
            let labels = row_argmax(&r);
            return Ok(RelaxResult { probabilities: r, labels, iterations: it, converged: true });
        }
    }
    let labels = row_argmax(&r);
    Ok(RelaxResult { probabilities: r, labels, iterations: max_iter, converged: false })
}

/// Lloyd's k-means with k-means++ seeding, used to initialize labelings.
pub fn kmeans_labels(x: &PointSet, k: usize, seed: u64, max_iter: usize) -> Result<Vec<usize>> {
    let n = x.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("cluster count {k} outside 1..={n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Vec<f64>> = vec![x.row(rng.random_range(0..n)).to_vec()];
    while centers.len() < k {
        let d: Vec<f64> = x.rows().map(|r| centers.iter().map(|c| sq_dist(r, c)).fold(f64::INFINITY, f64::min)).collect();
        let total: f64 = d.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, di) in d.iter().enumerate() {
                if u < *di {
                    idx = i;
                    break;
                }
                u -= di;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        centers.push(x.row(pick).to_vec());
    }
    let mut labels = vec![0; n];
    for _ in 0..max_iter {
        let next: Vec<usize> = x
            .rows()
            .map(|r| {
                let d: Vec<f64> = centers.iter().map(|c| -sq_dist(r, c)).collect();
                argmax(&d)
            })
            .collect();
        let stable = next == labels;
        labels = next;
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
            if !members.is_empty() {
                *center = x.select(&members).mean();
            }
        }
        if stable {
            break;
        }
    }
    Ok(labels)
}
