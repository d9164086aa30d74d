use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::points::PointSet;

/// Corruption applied by the noising step.
#[derive(Debug, Clone)]
pub enum NoiseKind {
    None,
    Gaussian(f64),
    /// Draw the displacement from a Gaussian or Epanechnikov kernel.
    Kernel(Kernel),
}

enum Sampler {
    Zero,
    Normal(f64),
    Epanechnikov(f64),
}

impl Sampler {
    fn from_kind(kind: &NoiseKind) -> Result<Self> {
        match kind {
            NoiseKind::None => Ok(Sampler::Zero),
            NoiseKind::Gaussian(s) => {
                if !(*s > 0.0) {
                    return Err(Error::invalid(format!("noise level must be positive, got {s}")));
                }
                Ok(Sampler::Normal(*s))
            }
            NoiseKind::Kernel(k) => match k.bandwidth() {
                Some(h) if k.is_gaussian() => Ok(Sampler::Normal(h)),
                Some(h) if k.is_epanechnikov() => Ok(Sampler::Epanechnikov(h)),
                _ => Err(Error::UnsampleableKernel(k.describe())),
            },
        }
    }

    fn perturb(&self, x: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            Sampler::Zero => x.to_vec(),
            Sampler::Normal(s) => x.iter().map(|v| v + s * rng.sample::<f64, _>(StandardNormal)).collect(),
            Sampler::Epanechnikov(h) => x
                .iter()
                .map(|v| {
                    // inverse CDF of 0.75(1 - u²) on [-1, 1]: u = 2 sin(asin(2F - 1) / 3)
                    let f: f64 = rng.random();
                    v + h * 2.0 * ((2.0 * f - 1.0).asin() / 3.0).sin()
                })
                .collect(),
        }
    }
}

/// One independent draw x̃_i = x_i + ε_i per point. Epanechnikov noise is drawn
/// per coordinate, so every coordinate moves by at most h.
pub fn noise_sample(kind: &NoiseKind, x: &PointSet, seed: u64) -> Result<PointSet> {
    let sampler = Sampler::from_kind(kind)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(x.as_slice().len());
    for r in x.rows() {
        data.extend(sampler.perturb(r, &mut rng));
    }
    PointSet::new(x.dim(), data)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DaeChain {
    /// x_0, x_1, ..., x_steps.
    pub states: Vec<Vec<f64>>,
    /// x̃_0, ..., x̃_{steps-1}: the noised inputs fed to the denoiser.
    pub noised: Vec<Vec<f64>>,
}

/// Alternates x̃_t = noise(x_t) and x_{t+1} = denoiser(x̃_t).
pub fn dae_chain(
    denoiser: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    noise: &NoiseKind,
    x0: &[f64],
    steps: usize,
    seed: u64,
) -> Result<DaeChain> {
    if steps == 0 {
        return Err(Error::invalid("chain needs at least one step"));
    }
    let sampler = Sampler::from_kind(noise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = vec![x0.to_vec()];
    let mut noised = Vec::with_capacity(steps);
    for _ in 0..steps {
        let xt = sampler.perturb(states.last().unwrap(), &mut rng);
        let next = denoiser(&xt)?;
        noised.push(xt);
        states.push(next);
    }
    Ok(DaeChain { states, noised })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_noise_is_identity() {
        let x = PointSet::from_rows(&[[1.0, -2.0], [0.5, 3.0]]).unwrap();
        let y = noise_sample(&NoiseKind::Gaussian(1e-300), &x, 1).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn epanechnikov_support() {
        let x = PointSet::from_rows(&vec![[0.0, 0.0]; 500]).unwrap();
        let k = Kernel::epanechnikov(0.3).unwrap();
        let y = noise_sample(&NoiseKind::Kernel(k), &x, 9).unwrap();
        assert!(y.as_slice().iter().all(|v| v.abs() <= 0.3));
        assert!(noise_sample(&NoiseKind::Kernel(Kernel::uniform()), &x, 1).is_err());
    }

    #[test]
    fn constant_chain_without_noise() {
        let c = dae_chain(&|x: &[f64]| Ok(x.to_vec()), &NoiseKind::None, &[1.5], 4, 0).unwrap();
        assert_eq!(c.states, vec![vec![1.5]; 5]);
    }
}
