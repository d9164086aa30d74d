use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::estimators::weighted_mean;
use crate::par;
use crate::points::PointSet;

/// Forward noising x_t = a_t x_{t−1} + ε_t, ε_t ~ N(0, sigma2_t), equivalently
/// x_t = b_t x_0 + η_t with Var(η_t) = s2_t.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSchedule {
    pub a: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub b: Vec<f64>,
    pub s2: Vec<f64>,
}

impl DiffusionSchedule {
    pub fn new(a: Vec<f64>, sigma2: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::InvalidSchedule("at least one step required".into()));
        }
        if a.len() != sigma2.len() {
            return Err(Error::InvalidSchedule(format!("{} scale factors but {} variances", a.len(), sigma2.len())));
        }
        if let Some(v) = a.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
            return Err(Error::InvalidSchedule(format!("scale factor {v} outside (0, 1]")));
        }
        if let Some(v) = sigma2.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidSchedule(format!("variance {v} must be positive")));
        }
        let mut b = Vec::with_capacity(a.len());
        let mut s2 = Vec::with_capacity(a.len());
        let (mut bt, mut st) = (1.0, 0.0);
        for (at, vt) in a.iter().zip(&sigma2) {
            bt *= at;
            st = at * at * st + vt;
            b.push(bt);
            s2.push(st);
        }
        Ok(Self { a, sigma2, b, s2 })
    }

    /// Variance-preserving schedule: sigma2 linear from `start` to `end`,
    /// a_t = √(1 − sigma2_t).
    pub fn linear(steps: usize, start: f64, end: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidSchedule("at least one step required".into()));
        }
        if !(start > 0.0 && end > 0.0 && start < 1.0 && end < 1.0) {
            return Err(Error::InvalidSchedule("variances must lie in (0, 1)".into()));
        }
        let sigma2: Vec<f64> =
            (0..steps).map(|t| if steps == 1 { start } else { start + (end - start) * t as f64 / (steps - 1) as f64 }).collect();
        let a = sigma2.iter().map(|v| (1.0 - v).sqrt()).collect();
        Self::new(a, sigma2)
    }

    pub fn steps(&self) -> usize {
        self.a.len()
    }
}

fn column_variances(x: &PointSet) -> Vec<f64> {
    let m = x.mean();
    let n = x.len() as f64;
    (0..x.dim()).map(|j| x.rows().map(|r| (r[j] - m[j]).powi(2)).sum::<f64>() / n).collect()
}

/// Gaussian local mean of `x` seen from `q` through the forward map
/// x ↦ a·x: weights exp(−‖q − a x_i‖²/2h²), shifted by the minimum distance
/// so the nearest reference point always has weight one.
fn scaled_gaussian_mean(h: f64, a: f64, x: &PointSet, q: &[f64]) -> Vec<f64> {
    let d: Vec<f64> = x.rows().map(|r| q.iter().zip(r).map(|(u, v)| (u - a * v).powi(2)).sum()).collect();
    let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = d.iter().map(|di| (-(di - min) / (2.0 * h * h)).exp()).collect();
    weighted_mean(&w, x).expect("nearest point has weight one")
}

/// Local-mean diffusion sampler. The forward pass caches noised copies X_t of
/// the training set; the reverse pass starts from a zero-mean Gaussian with
/// the per-coordinate variance of X_T and applies
/// X'_{t−1} = α_t m_K(X'_t; X_{t−1}) + (1 − α_t) X'_t with a Gaussian kernel of
/// bandwidth h_t, where the kernel compares X'_t with the forward image
/// a_t X_{t−1}. Defaults: α_t = 0.8, h_t = √sigma2_t.
pub fn diffusion_generate(
    x0: &PointSet,
    schedule: &DiffusionSchedule,
    n: usize,
    alpha: Option<&[f64]>,
    bandwidths: Option<&[f64]>,
    seed: u64,
) -> Result<PointSet> {
    let t_max = schedule.steps();
    if n == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let alpha: Vec<f64> = match alpha {
        Some(a) if a.len() != t_max => {
            return Err(Error::InvalidSchedule(format!("{} damping factors for {t_max} steps", a.len())))
        }
        Some(a) => a.to_vec(),
        None => vec![0.8; t_max],
    };
    if alpha.iter().any(|a| !(*a > 0.0 && *a <= 1.0)) {
        return Err(Error::InvalidSchedule("damping factors must lie in (0, 1]".into()));
    }
    let h: Vec<f64> = match bandwidths {
        Some(b) if b.len() != t_max => return Err(Error::InvalidSchedule(format!("{} bandwidths for {t_max} steps", b.len()))),
        Some(b) => b.to_vec(),
        None => schedule.sigma2.iter().map(|v| v.sqrt()).collect(),
    };
    if h.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidSchedule("bandwidths must be positive".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = x0.dim();
    let mut levels = vec![x0.clone()];
    for t in 0..t_max {
        let (a, s) = (schedule.a[t], schedule.sigma2[t].sqrt());
        let prev = levels.last().unwrap();
        let data: Vec<f64> = prev.as_slice().iter().map(|v| a * v + s * rng.sample::<f64, _>(StandardNormal)).collect();
        levels.push(PointSet::new(dim, data)?);
    }
    let sd: Vec<f64> = column_variances(&levels[t_max]).iter().map(|v| v.sqrt()).collect();
    let mut data = Vec::with_capacity(n * dim);
    for _ in 0..n {
        for s in &sd {
            data.push(s * rng.sample::<f64, _>(StandardNormal));
        }
    }
    let mut current = PointSet::new(dim, data)?;
    for t in (1..=t_max).rev() {
        let reference = &levels[t - 1];
        let (at, ht, scale) = (alpha[t - 1], h[t - 1], schedule.a[t - 1]);
        let rows = par::map_range(n, |i| {
            let q = current.row(i);
            let m = scaled_gaussian_mean(ht, scale, reference, q);
            q.iter().zip(&m).map(|(a, b)| at * b + (1.0 - at) * a).collect::<Vec<f64>>()
        });
        current = PointSet::new(dim, rows.concat())?;
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cumulative_factors() {
        let s = DiffusionSchedule::new(vec![0.5, 0.8], vec![0.1, 0.2]).unwrap();
        assert_eq!(s.b, vec![0.5, 0.4]);
        assert!((s.s2[1] - (0.64 * 0.1 + 0.2)).abs() < 1e-15);
        assert!(DiffusionSchedule::new(vec![1.2], vec![0.1]).is_err());
        assert!(DiffusionSchedule::new(vec![0.5], vec![0.0]).is_err());
        assert!(DiffusionSchedule::new(vec![0.5], vec![0.1, 0.1]).is_err());
    }

    #[test]
    fn singleton_training_set() {
        let x = PointSet::from_scalars(&[3.0]).unwrap();
        let s = DiffusionSchedule::linear(5, 1e-4, 0.2).unwrap();
        let g = diffusion_generate(&x, &s, 10, Some(&[1.0; 5]), None, 4).unwrap();
        assert!(g.as_slice().iter().all(|v| (v - 3.0).abs() < 1e-12));
    }
}
