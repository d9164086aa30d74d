use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EmbeddingResult;
use crate::error::{Error, Result};
use crate::points::PointSet;

/// Increasing link h applied to d²₁₂ − d²₁₃.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrimapLoss {
    Identity,
    /// Odd extension sign(u) ln(1 + |u|), defined for negative arguments too.
    Log1p,
}

impl TrimapLoss {
    fn value(self, u: f64) -> f64 {
        match self {
            TrimapLoss::Identity => u,
            TrimapLoss::Log1p => u.signum() * u.abs().ln_1p(),
        }
    }

    fn slope(self, u: f64) -> f64 {
        match self {
            TrimapLoss::Identity => 1.0,
            TrimapLoss::Log1p => 1.0 / (1.0 + u.abs()),
        }
    }
}

/// Anchor i, closer candidate j, farther candidate l, contrast weight
/// s(i,j) / (s(i,j) + s(i,l)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triplet {
    pub i: usize,
    pub j: usize,
    pub l: usize,
    pub weight: f64,
}

fn contrast(sij: f64, sil: f64) -> f64 {
    if sij + sil > 0.0 {
        sij / (sij + sil)
    } else {
        0.5
    }
}

const NEIGHBORS: usize = 10;
const RANDOMS: usize = 10;

/// All N³ triplets when they fit in `budget`; otherwise, per anchor, its 10
/// most similar points crossed with 10 uniform draws.
pub fn trimap_triplets(x: &PointSet, s: &(dyn Fn(&[f64], &[f64]) -> f64 + Sync), budget: usize, seed: u64) -> Vec<Triplet> {
    let n = x.len();
    let sim: Vec<Vec<f64>> = (0..n).map(|i| x.rows().map(|r| s(x.row(i), r)).collect()).collect();
    let mut out = Vec::new();
    if n.saturating_mul(n).saturating_mul(n) <= budget {
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    out.push(Triplet { i, j, l, weight: contrast(sim[i][j], sim[i][l]) });
                }
            }
        }
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| sim[i][b].total_cmp(&sim[i][a]).then(a.cmp(&b)));
        let near: Vec<usize> = order.into_iter().take(NEIGHBORS).collect();
        for _ in 0..RANDOMS.min(n - 1) {
            let mut l = rng.random_range(0..n - 1);
            if l >= i {
                l += 1;
            }
            for &j in &near {
                out.push(Triplet { i, j, l, weight: contrast(sim[i][j], sim[i][l]) });
            }
        }
    }
    out
}

/// Σ K(i,j,l) h(‖z_i − z_j‖² − ‖z_i − z_l‖²) over a fixed triplet set.
pub struct TrimapProblem {
    pub triplets: Vec<Triplet>,
    pub loss: TrimapLoss,
}

impl TrimapProblem {
    fn gap(z: &DMatrix<f64>, t: &Triplet) -> f64 {
        let dij = (z.row(t.i) - z.row(t.j)).norm_squared();
        let dil = (z.row(t.i) - z.row(t.l)).norm_squared();
        dij - dil
    }

    pub fn objective(&self, z: &DMatrix<f64>) -> f64 {
        self.triplets.iter().map(|t| t.weight * self.loss.value(Self::gap(z, t))).sum()
    }

    pub fn gradient(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(z.nrows(), z.ncols());
        for t in &self.triplets {
            let c = 2.0 * t.weight * self.loss.slope(Self::gap(z, t));
            let a = (z.row(t.i) - z.row(t.j)) * c;
            let b = (z.row(t.i) - z.row(t.l)) * c;
            let mut gi = g.row_mut(t.i);
            gi += &a - &b;
            let mut gj = g.row_mut(t.j);
            gj -= &a;
            let mut gl = g.row_mut(t.l);
            gl += &b;
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrimapOptions {
    pub dim: usize,
    pub loss: TrimapLoss,
    pub steps: usize,
    pub lr: f64,
    pub seed: u64,
    pub budget: usize,
}

/// Centers Z and scales it to unit root-mean-square norm; the objective is
/// unbounded below without a scale constraint.
fn normalize(z: &mut DMatrix<f64>) {
    let n = z.nrows();
    for c in 0..z.ncols() {
        let m = z.column(c).sum() / n as f64;
        z.column_mut(c).add_scalar_mut(-m);
    }
    let rms = (z.norm_squared() / n as f64).sqrt();
    if rms > 0.0 {
        *z /= rms;
    }
}

/// Gradient descent on the triplet objective with a scale-normalizing
/// projection after every step.
pub fn trimap_embed(x: &PointSet, s: &(dyn Fn(&[f64], &[f64]) -> f64 + Sync), opts: &TrimapOptions) -> Result<EmbeddingResult> {
    if opts.dim == 0 || opts.steps == 0 || !(opts.lr > 0.0) {
        return Err(Error::invalid("dimension, steps and learning rate must be positive"));
    }
    if x.len() < 3 {
        return Err(Error::invalid("need at least three points"));
    }
    let problem = TrimapProblem { triplets: trimap_triplets(x, s, opts.budget, opts.seed), loss: opts.loss };
    let scale = 1.0 / problem.triplets.len().max(1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut z = DMatrix::from_fn(x.len(), opts.dim, |_, _| rng.random_range(-0.1..0.1));
    normalize(&mut z);
    let mut trace = Vec::with_capacity(opts.steps);
    for _ in 0..opts.steps {
        let g = problem.gradient(&z);
        z -= g * (opts.lr * scale * x.len() as f64);
        normalize(&mut z);
        let f = problem.objective(&z);
        if !f.is_finite() {
            return Err(Error::NonFiniteLoss { step: trace.len(), trace });
        }
        trace.push(f);
    }
    Ok(EmbeddingResult {
        z: PointSet::from_matrix(&z)?,
        objective: *trace.last().unwrap(),
        method: "trimap".into(),
        iterations: opts.steps,
        trace,
    })
}
