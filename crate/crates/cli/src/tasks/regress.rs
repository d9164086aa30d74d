use locuskit::adaptive::{tune_bandwidth, BandwidthSearch, TunePredictor};
use locuskit::density::kde;
use locuskit::estimators::{local_linear_predict, local_mean_predict, local_mode_predict, loo_error, Fallback};
use locuskit::metrics::r_squared;
use locuskit::synth::noisy_sine;
use locuskit::{Dataset, Kernel, PointSet};

use super::{blob_keys, cells, coord_names, kernel, kernel_key, need, plane, synthetic_blobs, Task};
use crate::config::{key, Config, Key, Kind};
use crate::csvio::{cell, ingest_csv, CsvSchema};
use crate::error::CliResult;
use crate::output::Artifacts;
use crate::svg::{render, Plot};

fn regression_data(cfg: &Config) -> CliResult<(Dataset, bool)> {
    match cfg.path("input") {
        Some(p) => Ok((ingest_csv(&p, CsvSchema::FeaturesTarget)?.into_dataset(), false)),
        None => Ok((noisy_sine(cfg.at_least("n", 2)?, cfg.f64("noise")?, cfg.seed()?)?, true)),
    }
}

fn targets(d: &Dataset) -> CliResult<Vec<f64>> {
    Ok(d.real_targets()?.as_slice().to_vec())
}

/// Predictions at the training points, plus a dense curve when p = 1.
fn regress(cfg: &Config, predict: &dyn Fn(&Dataset, &[f64]) -> CliResult<f64>, title: &str) -> CliResult<(Artifacts, Dataset)> {
    let (d, synthetic) = regression_data(cfg)?;
    let y = targets(&d)?;
    let fitted: Vec<f64> = d.x.rows().map(|q| predict(&d, q)).collect::<CliResult<_>>()?;
    let p = d.x.dim();
    let mut a = Artifacts::default();
    let mut head = coord_names("x", p);
    head.extend(["y".to_string(), "fitted".to_string()]);
    a.header = head;
    a.rows = d.x.rows().zip(y.iter().zip(&fitted)).map(|(r, (t, f))| [cells(r), vec![cell(*t), cell(*f)]].concat()).collect();
    a.metric("n", d.len());
    a.metric("p", p);
    a.metric("r2", r_squared(&y, &fitted));
    a.metric("synthetic", synthetic);
    a.svg = Some(if p == 1 {
        let xs = d.x.column(0);
        let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        let m = cfg.at_least("grid", 2)?;
        let curve: Vec<(f64, f64)> = (0..m)
            .map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64)
            .map(|q| predict(&d, &[q]).map(|v| (q, v)))
            .collect::<CliResult<_>>()?;
        let data: Vec<(f64, f64)> = xs.iter().copied().zip(y.iter().copied()).collect();
        render(&Plot::Lines { series: vec![("data".into(), data), ("fit".into(), curve)] }, title)?
    } else {
        render(&Plot::Scatter { points: y.iter().copied().zip(fitted.iter().copied()).collect(), groups: None }, title)?
    });
    Ok((a, d))
}

const LOCAL_LINEAR_KEYS: &[Key] = &[
    key("input", Kind::Path, None, "CSV with feature columns then a target column; omit for a noisy sine"),
    key("n", Kind::Int, Some("100"), "synthetic: number of points"),
    key("noise", Kind::Float, Some("0.1"), "synthetic: noise standard deviation"),
    kernel_key(),
    key("bandwidth", Kind::Float, Some("0.5"), "kernel bandwidth"),
    key("lambda", Kind::Float, Some("0.0"), "ridge penalty on the slope"),
    key("grid", Kind::Int, Some("200"), "curve resolution for one-dimensional inputs"),
];

fn run_local_linear(cfg: &Config) -> CliResult<Artifacts> {
    let k = kernel(cfg)?;
    let lambda = cfg.f64("lambda")?;
    need(lambda >= 0.0, "lambda must be non-negative")?;
    let (a, _) = regress(cfg, &|d, q| Ok(local_linear_predict(&k, d, q, lambda)?.value[0]), "local linear regression")?;
    Ok(a)
}

pub const LOCAL_LINEAR: Task = Task {
    name: "regress-local-linear",
    about: "Kernel-weighted local linear (ridge) regression",
    keys: LOCAL_LINEAR_KEYS,
    run: run_local_linear,
};

const LOCAL_MEAN_KEYS: &[Key] = &[
    key("input", Kind::Path, None, "CSV with feature columns then a target column; omit for a noisy sine"),
    key("n", Kind::Int, Some("100"), "synthetic: number of points"),
    key("noise", Kind::Float, Some("0.1"), "synthetic: noise standard deviation"),
    kernel_key(),
    key("bandwidth", Kind::Float, Some("0.3"), "kernel bandwidth"),
    key("grid", Kind::Int, Some("200"), "curve resolution for one-dimensional inputs"),
];

fn run_local_mean(cfg: &Config) -> CliResult<Artifacts> {
    let k = kernel(cfg)?;
    let (mut a, d) =
        regress(cfg, &|d, q| Ok(local_mean_predict(&k, d, q, Fallback::NearestNeighbor)?[0]), "local mean regression")?;
    a.metric("loo_error", loo_error(&k, &d)?);
    Ok(a)
}

pub const LOCAL_MEAN: Task = Task {
    name: "regress-local-mean",
    about: "Local mean (Nadaraya-Watson) regression",
    keys: LOCAL_MEAN_KEYS,
    run: run_local_mean,
};

const CLASSIFY_KEYS: &[Key] = &{
    let b = blob_keys!();
    [
        key("input", Kind::Path, None, "CSV with feature columns then an integer label column; omit for blobs"),
        b[0],
        b[1],
        b[2],
        b[3],
        kernel_key(),
        key("bandwidth", Kind::Float, Some("1.0"), "kernel bandwidth"),
    ]
};

fn run_classify(cfg: &Config) -> CliResult<Artifacts> {
    let d = match cfg.path("input") {
        Some(p) => ingest_csv(&p, CsvSchema::FeaturesLabel)?.into_dataset(),
        None => {
            let (x, labels) = synthetic_blobs(cfg)?;
            Dataset::classification(x, labels)?
        }
    };
    let k = kernel(cfg)?;
    let labels = d.labels()?.to_vec();
    let n = d.len();
    // leave-one-out: each point is classified by the others
    let mut predicted = Vec::with_capacity(n);
    for i in 0..n {
        let keep: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let sub = Dataset::classification(d.x.select(&keep), keep.iter().map(|&j| labels[j]).collect())?;
        predicted.push(local_mode_predict(&k, &sub, d.x.row(i))?.0);
    }
    let correct = predicted.iter().zip(&labels).filter(|(a, b)| a == b).count();
    let mut a = Artifacts {
        header: [coord_names("x", d.x.dim()), vec!["label".into(), "predicted".into()]].concat(),
        ..Default::default()
    };
    a.rows =
        d.x.rows()
            .zip(labels.iter().zip(&predicted))
            .map(|(r, (l, p))| [cells(r), vec![l.to_string(), p.to_string()]].concat())
            .collect();
    a.metric("n", n);
    a.metric("classes", d.n_classes()?);
    a.metric("loo_accuracy", correct as f64 / n as f64);
    a.svg = Some(render(&Plot::Scatter { points: plane(&d.x), groups: Some(predicted) }, "local classification")?);
    Ok(a)
}

pub const CLASSIFY: Task = Task {
    name: "classify-local",
    about: "Local mode (kernel vote) classification, scored leave-one-out",
    keys: CLASSIFY_KEYS,
    run: run_classify,
};

const KDE_KEYS: &[Key] = &[
    key("input", Kind::Path, None, "CSV of feature columns; omit for a two-component 1-D mixture"),
    key("n", Kind::Int, Some("200"), "synthetic: number of points"),
    key("means", Kind::Floats, Some("[-2.0, 2.0]"), "synthetic: mixture component means"),
    key("variance", Kind::Float, Some("0.25"), "synthetic: component variance"),
    kernel_key(),
    key("bandwidth", Kind::Float, Some("0.3"), "kernel bandwidth"),
    key("grid", Kind::Int, Some("200"), "evaluation grid size for one-dimensional data"),
];

fn run_kde(cfg: &Config) -> CliResult<Artifacts> {
    let x = match cfg.path("input") {
        Some(p) => ingest_csv(&p, CsvSchema::FeaturesOnly)?.into_dataset().x,
        None => {
            let means = cfg.floats("means").unwrap_or_default();
            need(!means.is_empty(), "means must not be empty")?;
            let v = locuskit::synth::gaussian_mixture_1d(cfg.at_least("n", 1)?, &means, cfg.positive("variance")?, cfg.seed()?);
            PointSet::from_scalars(&v)?
        }
    };
    let k = kernel(cfg)?;
    let n = x.len();
    let mut a = Artifacts::default();
    let loo: Vec<f64> = (0..n)
        .map(|i| {
            let keep: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            kde(&k, &x.select(&keep), x.row(i))
        })
        .collect::<locuskit::Result<_>>()?;
    let loglik = loo.iter().map(|p| p.ln()).sum::<f64>() / n as f64;
    a.metric("n", n);
    a.metric("loo_mean_log_density", if loglik.is_finite() { loglik.into() } else { serde_json::Value::Null });
    if x.dim() == 1 {
        let xs = x.column(0);
        let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        let pad = 3.0 * k.bandwidth().unwrap_or(0.0).max((hi - lo) * 0.05);
        let m = cfg.at_least("grid", 2)?;
        let step = (hi - lo + 2.0 * pad) / (m - 1) as f64;
        let curve: Vec<(f64, f64)> = (0..m)
            .map(|i| lo - pad + step * i as f64)
            .map(|q| kde(&k, &x, &[q]).map(|p| (q, p)))
            .collect::<locuskit::Result<_>>()?;
        a.metric("integral", curve.iter().map(|(_, p)| p).sum::<f64>() * step);
        a.table(&["x", "density"], curve.iter().map(|(q, p)| vec![cell(*q), cell(*p)]).collect());
        a.svg = Some(render(&Plot::Lines { series: vec![("density".into(), curve)] }, "kernel density estimate")?);
    } else {
        let dens: Vec<f64> = x.rows().map(|q| kde(&k, &x, q)).collect::<locuskit::Result<_>>()?;
        a.header = [coord_names("x", x.dim()), vec!["density".into()]].concat();
        a.rows = x.rows().zip(&dens).map(|(r, p)| [cells(r), vec![cell(*p)]].concat()).collect();
        let max = dens.iter().cloned().fold(0.0, f64::max);
        let groups = dens.iter().map(|p| if max > 0.0 { (p / max * 4.999) as usize } else { 0 }).collect();
        a.svg = Some(render(&Plot::Scatter { points: plane(&x), groups: Some(groups) }, "kernel density estimate")?);
    }
    Ok(a)
}

pub const KDE: Task = Task {
    name: "density-kde",
    about: "Kernel density estimate on a grid (1-D) or at the sample points",
    keys: KDE_KEYS,
    run: run_kde,
};

const TUNE_KEYS: &[Key] = &[
    key("input", Kind::Path, None, "CSV with feature columns then a target column; omit for a noisy sine"),
    key("n", Kind::Int, Some("100"), "synthetic: number of points"),
    key("noise", Kind::Float, Some("0.1"), "synthetic: noise standard deviation"),
    key(
        "predictor",
        Kind::Choice(&["local-mean", "local-linear", "kde-loo"]),
        Some("\"local-mean\""),
        "leave-one-out loss to minimize",
    ),
    key("lambda", Kind::Float, Some("1e-6"), "ridge penalty for local-linear"),
    key("search", Kind::Choice(&["grid", "golden"]), Some("\"grid\""), "grid scan or golden-section search"),
    key("grid", Kind::Floats, None, "explicit bandwidth grid; overrides lo/hi/points"),
    key("lo", Kind::Float, Some("0.01"), "smallest bandwidth"),
    key("hi", Kind::Float, Some("2.0"), "largest bandwidth"),
    key("points", Kind::Int, Some("20"), "log-spaced grid size"),
];

fn run_tune(cfg: &Config) -> CliResult<Artifacts> {
    let (d, _) = regression_data(cfg)?;
    let predictor = match cfg.str("predictor")? {
        "local-mean" => TunePredictor::LocalMean,
        "local-linear" => TunePredictor::LocalLinear { lambda: cfg.f64("lambda")? },
        _ => TunePredictor::KdeLoo,
    };
    let search = match (cfg.str("search")?, cfg.floats("grid")) {
        ("grid", Some(g)) => BandwidthSearch::Grid(g),
        ("grid", None) => BandwidthSearch::log_grid(cfg.positive("lo")?, cfg.positive("hi")?, cfg.at_least("points", 1)?),
        _ => BandwidthSearch::Golden { lo: cfg.positive("lo")?, hi: cfg.positive("hi")? },
    };
    let r = tune_bandwidth(predictor, &d, &search)?;
    let mut curve = r.curve.clone();
    curve.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut a = Artifacts::default();
    a.table(&["h", "loss"], curve.iter().map(|(h, l)| vec![cell(*h), cell(*l)]).collect());
    a.metric("h_star", r.h);
    a.metric("loss_star", r.loss);
    a.metric("evaluations", r.curve.len());
    if !matches!(predictor, TunePredictor::KdeLoo) {
        let k = Kernel::gaussian(r.h)?;
        let y = targets(&d)?;
        let fitted: Vec<f64> =
            d.x.rows().map(|q| Ok(local_mean_predict(&k, &d, q, Fallback::NearestNeighbor)?[0])).collect::<CliResult<_>>()?;
        a.metric("r2_at_h_star", r_squared(&y, &fitted));
    }
    let finite: Vec<(f64, f64)> = curve.iter().filter(|(_, l)| l.is_finite()).map(|(h, l)| (h.log10(), *l)).collect();
    if !finite.is_empty() {
        let argmin = finite.iter().position(|(h, _)| *h == r.h.log10()).unwrap_or(0);
        a.svg = Some(render(&Plot::CurveArgmin { points: finite, argmin }, "leave-one-out loss vs log10 h")?);
    }
    Ok(a)
}

pub const TUNE: Task =
    Task { name: "tune-bandwidth", about: "Gaussian bandwidth minimizing a leave-one-out loss", keys: TUNE_KEYS, run: run_tune };
