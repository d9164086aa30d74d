use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{argmax, kernel_weights, nearest_index, weighted_mean};
use crate::error::{Error, Result};
use crate::kernel::{gram, normalize_rows, Kernel};
use crate::linalg::{dist, sq_dist};
use crate::points::{Dataset, PointSet, Targets};

/// What to do when every kernel weight at a query vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fallback {
    #[default]
    Error,
    NearestNeighbor,
}

/// Differentiable observation model for local likelihood fitting.
pub trait LikelihoodModel: Sync {
    fn n_params(&self) -> usize;
    fn log_lik(&self, obs: &[f64], theta: &[f64]) -> f64;
    /// Gradient of `log_lik` with respect to theta.
    fn grad(&self, obs: &[f64], theta: &[f64]) -> Vec<f64>;
}

/// Pointwise loss of a local decision.
pub enum Loss<'a> {
    Squared,
    ZeroOne,
    /// Euclidean distance; the minimizer is the weighted geometric median.
    Distance,
    /// Negative log-likelihood, maximized by plain gradient ascent on the
    /// weight-normalized objective.
    NegLogLik {
        model: &'a dyn LikelihoodModel,
        init: Vec<f64>,
        step: f64,
        max_iter: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalFitResult {
    pub theta: Vec<f64>,
    pub loss: f64,
    /// Normalized weights re-expressing theta as a weighted sum of responses.
    pub equivalent_weights: Option<Vec<f64>>,
    pub converged: bool,
}

const WEISZFELD_MAX_ITER: usize = 200;
const WEISZFELD_TOL: f64 = 1e-9;

/// Responses the loss is measured on: real targets when present, else the
/// points themselves.
fn responses(data: &Dataset) -> Result<PointSet> {
    match &data.targets {
        Some(Targets::Real(_)) | Some(Targets::Matrix(_)) => data.real_targets(),
        _ => Ok(data.x.clone()),
    }
}

/// Minimizes Σ K(x*, x_i) l(r_i, θ) over θ.
pub fn local_fit(loss: &Loss<'_>, k: &Kernel, data: &Dataset, query: &[f64]) -> Result<LocalFitResult> {
    let w = kernel_weights(k, &data.x, query)?;
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptyNeighborhood { index: 0 });
    }
    match loss {
        Loss::Squared => {
            let y = responses(data)?;
            let theta = weighted_mean(&w, &y).ok_or(Error::EmptyNeighborhood { index: 0 })?;
            let loss = w.iter().zip(y.rows()).map(|(wi, yi)| wi * sq_dist(yi, &theta)).sum();
            Ok(LocalFitResult { theta, loss, equivalent_weights: Some(w.iter().map(|v| v / total).collect()), converged: true })
        }
        Loss::ZeroOne => {
            let labels = data.labels()?;
            let scores = class_scores(&w, labels, data.n_classes()?);
            let class = argmax(&scores);
            let loss = w.iter().zip(labels).filter(|(_, l)| **l != class).map(|(wi, _)| wi).sum();
            Ok(LocalFitResult { theta: vec![class as f64], loss, equivalent_weights: None, converged: true })
        }
        Loss::Distance => {
            let y = responses(data)?;
            let (theta, converged) = weiszfeld(&w, &y);
            let loss = w.iter().zip(y.rows()).map(|(wi, yi)| wi * dist(yi, &theta)).sum();
            Ok(LocalFitResult { theta, loss, equivalent_weights: None, converged })
        }
        Loss::NegLogLik { model, init, step, max_iter } => {
            if init.len() != model.n_params() {
                return Err(Error::DimensionMismatch { expected: model.n_params(), found: init.len() });
            }
            let y = responses(data)?;
            let mut theta = init.clone();
            let mut converged = false;
            for _ in 0..*max_iter {
                let mut g = vec![0.0; theta.len()];
                for (wi, yi) in w.iter().zip(y.rows()) {
                    if *wi != 0.0 {
                        for (gj, dj) in g.iter_mut().zip(model.grad(yi, &theta)) {
                            *gj += wi * dj / total;
                        }
                    }
                }
                let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                theta.iter_mut().zip(&g).for_each(|(t, gj)| *t += step * gj);
                if gnorm < 1e-10 {
                    converged = true;
                    break;
                }
            }
            let loss = -w.iter().zip(y.rows()).map(|(wi, yi)| wi * model.log_lik(yi, &theta)).sum::<f64>();
            Ok(LocalFitResult { theta, loss, equivalent_weights: None, converged })
        }
    }
}

fn weiszfeld(w: &[f64], y: &PointSet) -> (Vec<f64>, bool) {
    let mut theta = weighted_mean(w, y).expect("positive total weight");
    for _ in 0..WEISZFELD_MAX_ITER {
        let mut num = vec![0.0; y.dim()];
        let mut den = 0.0;
        for (wi, yi) in w.iter().zip(y.rows()) {
            if *wi == 0.0 {
                continue;
            }
            let mut d = dist(yi, &theta);
            if d < 1e-12 {
                theta.iter_mut().for_each(|t| *t += 1e-12);
                d = dist(yi, &theta).max(1e-12);
            }
            let c = wi / d;
            den += c;
            for (n, v) in num.iter_mut().zip(yi) {
                *n += c * v;
            }
        }
        let next: Vec<f64> = num.iter().map(|n| n / den).collect();
        let step = dist(&next, &theta);
        theta = next;
        if step < WEISZFELD_TOL {
            return (theta, true);
        }
    }
    (theta, false)
}

pub(crate) fn class_scores(w: &[f64], labels: &[usize], n_classes: usize) -> Vec<f64> {
    let mut scores = vec![0.0; n_classes];
    for (wi, l) in w.iter().zip(labels) {
        scores[*l] += wi;
    }
    scores
}

/// Kernel-weighted average of the targets (Nadaraya-Watson).
pub fn local_mean_predict(k: &Kernel, data: &Dataset, query: &[f64], fallback: Fallback) -> Result<Vec<f64>> {
    let y = data.real_targets()?;
    let w = kernel_weights(k, &data.x, query)?;
    match weighted_mean(&w, &y) {
        Some(mut m) => {
            // keep the prediction inside the componentwise target range despite rounding
            for (j, v) in m.iter_mut().enumerate() {
                let (lo, hi) = y.rows().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[j]), hi.max(r[j])));
                *v = v.clamp(lo, hi);
            }
            Ok(m)
        }
        None => match fallback {
            Fallback::Error => Err(Error::EmptyNeighborhood { index: 0 }),
            Fallback::NearestNeighbor => Ok(y.row(nearest_index(&data.x, query)).to_vec()),
        },
    }
}

/// K̃ Y for K̃ the row-normalized gram of queries against the sample.
pub fn lazy_transform(k: &Kernel, data: &Dataset, queries: &PointSet) -> Result<PointSet> {
    let y = data.real_targets()?;
    let kt = normalize_rows(&gram(k, queries, &data.x)?)?;
    if let Some(&index) = kt.empty_rows.first() {
        return Err(Error::EmptyNeighborhood { index });
    }
    kt.apply(&y)
}

/// Leave-one-out squared error of the local mean (diagonal removed).
pub fn loo_error(k: &Kernel, data: &Dataset) -> Result<f64> {
    let n = data.len();
    if n < 2 {
        return Err(Error::invalid("leave-one-out needs at least two points"));
    }
    let y = data.real_targets()?;
    let mut g = gram(k, &data.x, &data.x)?;
    for i in 0..n {
        g.values[(i, i)] = 0.0;
    }
    let kt = normalize_rows(&g)?;
    if let Some(&index) = kt.empty_rows.first() {
        return Err(Error::EmptyNeighborhood { index });
    }
    let pred = kt.apply(&y)?;
    Ok(pred.rows().zip(y.rows()).map(|(p, t)| sq_dist(p, t)).sum())
}

/// Class with the largest kernel weight, with the per-class weight sums.
pub fn local_mode_predict(k: &Kernel, data: &Dataset, query: &[f64]) -> Result<(usize, Vec<f64>)> {
    let labels = data.labels()?;
    let w = kernel_weights(k, &data.x, query)?;
    if !(w.iter().sum::<f64>() > 0.0) {
        return Err(Error::EmptyNeighborhood { index: 0 });
    }
    let scores = class_scores(&w, labels, data.n_classes()?);
    Ok((argmax(&scores), scores))
}

/// Binary margin form: sign of Σ K(x*, x_i) y_i for y_i = ±1 targets, with
/// sign(0) = +1.
pub fn local_margin_sign(k: &Kernel, data: &Dataset, query: &[f64]) -> Result<f64> {
    let y = data.real_targets()?;
    let w = kernel_weights(k, &data.x, query)?;
    let s: f64 = w.iter().zip(y.rows()).map(|(wi, yi)| wi * yi[0]).sum();
    Ok(if s >= 0.0 { 1.0 } else { -1.0 })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Value(Vec<f64>),
    Class { class: usize, scores: Vec<f64> },
}

/// K-nearest-neighbor prediction, optionally kernel-weighted inside the
/// neighbor set. Class scores are (1/K) Σ_{neighbors of class c} weight.
pub fn knn_predict(count: usize, data: &Dataset, query: &[f64], weight: Option<&Kernel>) -> Result<Prediction> {
    let n = data.len();
    if count == 0 || count > n {
        return Err(Error::invalid(format!("neighbor count {count} outside 1..={n}")));
    }
    if query.len() != data.x.dim() {
        return Err(Error::DimensionMismatch { expected: data.x.dim(), found: query.len() });
    }
    let mut order: Vec<(f64, usize)> = data.x.rows().enumerate().map(|(i, r)| (sq_dist(query, r), i)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut w = vec![0.0; n];
    for &(_, i) in &order[..count] {
        w[i] = match weight {
            Some(k) => k.eval(query, data.x.row(i))?,
            None => 1.0,
        };
    }
    match &data.targets {
        Some(Targets::Labels(labels)) => {
            let mut scores = class_scores(&w, labels, data.n_classes()?);
            scores.iter_mut().for_each(|s| *s /= count as f64);
            Ok(Prediction::Class { class: argmax(&scores), scores })
        }
        _ => {
            let y = data.real_targets()?;
            let m = weighted_mean(&w, &y).ok_or(Error::EmptyNeighborhood { index: 0 })?;
            Ok(Prediction::Value(m))
        }
    }
}

/// Averages targets of `n` indices drawn with probability ∝ K(x*, x_i).
pub fn monte_carlo_local_mean(k: &Kernel, data: &Dataset, query: &[f64], n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("need at least one draw"));
    }
    let y = data.real_targets()?;
    let w = kernel_weights(k, &data.x, query)?;
    if !(w.iter().sum::<f64>() > 0.0) {
        return Err(Error::EmptyNeighborhood { index: 0 });
    }
    let dist = WeightedIndex::new(&w).map_err(|e| Error::invalid(format!("kernel weights: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = vec![0.0; y.dim()];
    for _ in 0..n {
        let i = dist.sample(&mut rng);
        for (a, v) in acc.iter_mut().zip(y.row(i)) {
            *a += v;
        }
    }
    acc.iter_mut().for_each(|a| *a /= n as f64);
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reg(x: &[f64], y: &[f64]) -> Dataset {
        Dataset::regression(PointSet::from_scalars(x).unwrap(), y.to_vec()).unwrap()
    }

    #[test]
    fn squared_loss_is_weighted_mean() {
        let d = reg(&[0.0, 2.0], &[0.0, 1.0]);
        let g = Kernel::gaussian(1.0).unwrap();
        let r = local_fit(&Loss::Squared, &g, &d, &[0.0]).unwrap();
        let e = (-2.0f64).exp();
        assert_relative_eq!(r.theta[0], e / (1.0 + e), epsilon = 1e-12);
        assert_relative_eq!(r.theta[0], 0.11920, epsilon = 1e-5);
        let u = local_fit(&Loss::Squared, &Kernel::uniform(), &reg(&[0.0, 5.0], &[1.0, 3.0]), &[9.0]).unwrap();
        assert_eq!(u.theta, vec![2.0]);
        assert_eq!(u.equivalent_weights, Some(vec![0.5, 0.5]));
    }

    #[test]
    fn zero_one_with_dirac() {
        let x = PointSet::from_scalars(&[0.0, 1.0, 2.0]).unwrap();
        let d = Dataset::classification(x, vec![0, 2, 1]).unwrap();
        let r = local_fit(&Loss::ZeroOne, &Kernel::dirac(), &d, &[1.0]).unwrap();
        assert_eq!(r.theta, vec![2.0]);
        assert_eq!(r.loss, 0.0);
    }

    #[test]
    fn geometric_median_of_collinear_points() {
        let x = PointSet::from_scalars(&[0.0, 1.0, 10.0]).unwrap();
        let d = Dataset::unsupervised(x).unwrap();
        let r = local_fit(&Loss::Distance, &Kernel::uniform(), &d, &[0.0]).unwrap();
        assert!((r.theta[0] - 1.0).abs() < 1e-6, "{:?}", r.theta);
    }

    struct UnitGaussian;
    impl LikelihoodModel for UnitGaussian {
        fn n_params(&self) -> usize {
            1
        }
        fn log_lik(&self, obs: &[f64], theta: &[f64]) -> f64 {
            -0.5 * (obs[0] - theta[0]).powi(2)
        }
        fn grad(&self, obs: &[f64], theta: &[f64]) -> Vec<f64> {
            vec![obs[0] - theta[0]]
        }
    }

    #[test]
    fn gaussian_likelihood_recovers_weighted_mean() {
        let d = reg(&[0.0, 2.0, 3.0], &[1.0, 4.0, -2.0]);
        let g = Kernel::gaussian(1.5).unwrap();
        let model = UnitGaussian;
        let loss = Loss::NegLogLik { model: &model, init: vec![0.0], step: 0.5, max_iter: 500 };
        let r = local_fit(&loss, &g, &d, &[1.0]).unwrap();
        let m = local_mean_predict(&g, &d, &[1.0], Fallback::Error).unwrap();
        assert!(r.converged);
        assert_relative_eq!(r.theta[0], m[0], epsilon = 1e-8);
    }

    #[test]
    fn local_mean_examples_and_fallback() {
        let d = reg(&[0.0, 1.0, 2.0], &[5.0, 6.0, 7.0]);
        assert_eq!(local_mean_predict(&Kernel::dirac(), &d, &[2.0], Fallback::Error).unwrap(), vec![7.0]);
        assert_eq!(local_mean_predict(&Kernel::uniform(), &d, &[40.0], Fallback::Error).unwrap(), vec![6.0]);
        let tight = Kernel::neighborhood(0.1).unwrap();
        assert_eq!(local_mean_predict(&tight, &d, &[1.4], Fallback::Error), Err(Error::EmptyNeighborhood { index: 0 }));
        assert_eq!(local_mean_predict(&tight, &d, &[1.4], Fallback::NearestNeighbor).unwrap(), vec![6.0]);
    }

    #[test]
    fn loo_examples() {
        let uni = Kernel::uniform();
        assert_eq!(loo_error(&uni, &reg(&[0.0, 1.0], &[0.0, 1.0])).unwrap(), 2.0);
        assert_eq!(loo_error(&uni, &reg(&[3.0, 3.0], &[2.0, 2.0])).unwrap(), 0.0);
        let tight = Kernel::neighborhood(0.1).unwrap();
        assert!(matches!(loo_error(&tight, &reg(&[0.0, 1.0], &[0.0, 1.0])), Err(Error::EmptyNeighborhood { .. })));
    }

    #[test]
    fn mode_examples() {
        let x = PointSet::from_scalars(&[0.0, 1.0, 2.0]).unwrap();
        let d = Dataset::classification(x, vec![0, 0, 1]).unwrap();
        let g = Kernel::gaussian(1.0).unwrap();
        assert_eq!(local_mode_predict(&g, &d, &[1.9]).unwrap().0, 1);
        assert_eq!(local_mode_predict(&Kernel::uniform(), &d, &[1.9]).unwrap().0, 0);
        assert_eq!(local_mode_predict(&Kernel::dirac(), &d, &[2.0]).unwrap().0, 1);
    }

    #[test]
    fn knn_examples() {
        let d = reg(&[0.0, 1.0, 10.0], &[0.0, 1.0, 100.0]);
        assert_eq!(knn_predict(2, &d, &[0.4], None).unwrap(), Prediction::Value(vec![0.5]));
        assert_eq!(knn_predict(1, &d, &[9.0], None).unwrap(), Prediction::Value(vec![100.0]));
        assert!(knn_predict(4, &d, &[0.0], None).is_err());
        assert!(knn_predict(0, &d, &[0.0], None).is_err());
    }

    #[test]
    fn monte_carlo_dirac_is_exact() {
        let d = reg(&[0.0, 1.0], &[3.0, 8.0]);
        assert_eq!(monte_carlo_local_mean(&Kernel::dirac(), &d, &[1.0], 17, 3).unwrap(), vec![8.0]);
        let one = monte_carlo_local_mean(&Kernel::uniform(), &d, &[1.0], 1, 3).unwrap();
        assert!(one == vec![3.0] || one == vec![8.0]);
    }
}
