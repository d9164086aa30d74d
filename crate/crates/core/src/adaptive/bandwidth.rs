use crate::density::kde;
use crate::error::{Error, Result};
use crate::estimators::{local_linear_predict, loo_error};
use crate::kernel::Kernel;
use crate::linalg::sq_dist;
use crate::par;
use crate::points::{Dataset, PointSet, Targets};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TunePredictor {
    /// Hollow local-mean leave-one-out squared error.
    LocalMean,
    /// Leave-one-out squared error of the local linear fit with ridge λ.
    LocalLinear { lambda: f64 },
    /// Leave-one-out negative mean log density.
    KdeLoo,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BandwidthSearch {
    Grid(Vec<f64>),
    /// Golden-section search on log h inside [lo, hi].
    Golden {
        lo: f64,
        hi: f64,
    },
}

impl BandwidthSearch {
    /// `n` log-spaced points from `lo` to `hi` inclusive.
    pub fn log_grid(lo: f64, hi: f64, n: usize) -> Self {
        let grid = (0..n)
            .map(|i| match i {
                0 => lo,
                _ if i + 1 == n => hi,
                _ => (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp(),
            })
            .collect();
        BandwidthSearch::Grid(grid)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub h: f64,
    pub loss: f64,
    /// Every evaluated (h, loss), in evaluation order for golden search and
    /// grid order otherwise. Failed evaluations are scored +∞.
    pub curve: Vec<(f64, f64)>,
}

fn loo_local_linear(k: &Kernel, data: &Dataset, lambda: f64) -> Result<f64> {
    let y = data.real_targets()?;
    let n = data.len();
    let errs = par::try_map_range(n, |i| {
        let keep: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let sub = Dataset::new(data.x.select(&keep), Some(Targets::Matrix(y.select(&keep))))?;
        let fit = local_linear_predict(k, &sub, data.x.row(i), lambda)?;
        Ok(sq_dist(&fit.value, y.row(i)))
    })?;
    Ok(errs.iter().sum())
}

fn loo_kde(k: &Kernel, x: &PointSet) -> Result<f64> {
    let n = x.len();
    let logs = par::try_map_range(n, |i| {
        let keep: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let p = kde(k, &x.select(&keep), x.row(i))?;
        Ok(if p > 0.0 { -p.ln() } else { f64::INFINITY })
    })?;
    Ok(logs.iter().sum::<f64>() / n as f64)
}

fn score(predictor: TunePredictor, data: &Dataset, h: f64) -> f64 {
    let Ok(k) = Kernel::gaussian(h) else {
        return f64::INFINITY;
    };
    let loss = match predictor {
        TunePredictor::LocalMean => loo_error(&k, data),
        TunePredictor::LocalLinear { lambda } => loo_local_linear(&k, data, lambda),
        TunePredictor::KdeLoo => loo_kde(&k, &data.x),
    };
    match loss {
        Ok(v) if v.is_finite() => v,
        _ => f64::INFINITY,
    }
}

/// Gaussian bandwidth minimizing a leave-one-out loss.
pub fn tune_bandwidth(predictor: TunePredictor, data: &Dataset, search: &BandwidthSearch) -> Result<TuneResult> {
    if data.len() < 2 {
        return Err(Error::invalid("leave-one-out needs at least two points"));
    }
    let curve = match search {
        BandwidthSearch::Grid(grid) => {
            if grid.is_empty() || grid.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
                return Err(Error::invalid("grid must be non-empty with positive bandwidths"));
            }
            grid.iter().map(|&h| (h, score(predictor, data, h))).collect()
        }
        BandwidthSearch::Golden { lo, hi } => {
            if !(*lo > 0.0 && hi > lo && hi.is_finite()) {
                return Err(Error::invalid(format!("invalid bracket [{lo}, {hi}]")));
            }
            golden(|h| score(predictor, data, h), *lo, *hi)
        }
    };
    let mut best = 0;
    for (i, &(h, l)) in curve.iter().enumerate() {
        let (bh, bl) = curve[best];
        if l < bl || (l == bl && h < bh) {
            best = i;
        }
    }
    let (h, loss) = curve[best];
    Ok(TuneResult { h, loss, curve })
}

fn golden(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut curve = Vec::new();
    let mut eval = |u: f64| {
        let v = f(u.exp());
        curve.push((u.exp(), v));
        v
    };
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (eval(c), eval(d));
    // relative tolerance 1e-3 on h is an absolute tolerance on log h
    while b - a > 1e-3 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = eval(d);
        }
    }
    curve
}
