use locuskit::metrics::adjusted_rand_index;
use locuskit::shift::{
    extract_clusters, kmeans_labels, mean_shift, medoid_shift, medoid_shift_iterated, relaxation_label, RelaxInit, RelaxMode,
    ShiftOptions,
};
use locuskit::PointSet;

use super::{blob_keys, cells, coord_names, kernel, kernel_key, need, plane, synthetic_blobs, Task};
use crate::config::{key, Config, Key, Kind};
use crate::csvio::{ingest_csv, CsvSchema};
use crate::error::CliResult;
use crate::output::Artifacts;
use crate::svg::{render, Plot};

/// Input points and, for synthetic data, the generating labels.
fn points(cfg: &Config) -> CliResult<(PointSet, Option<Vec<usize>>)> {
    match cfg.path("input") {
        Some(p) => Ok((ingest_csv(&p, CsvSchema::FeaturesOnly)?.into_dataset().x, None)),
        None => {
            let (x, l) = synthetic_blobs(cfg)?;
            Ok((x, Some(l)))
        }
    }
}

fn labelled(x: &PointSet, labels: &[usize], truth: Option<&[usize]>, title: &str) -> CliResult<Artifacts> {
    let mut a = Artifacts { header: [coord_names("x", x.dim()), vec!["cluster".into()]].concat(), ..Default::default() };
    a.rows = x.rows().zip(labels).map(|(r, l)| [cells(r), vec![l.to_string()]].concat()).collect();
    a.metric("n", x.len());
    a.metric("n_clusters", labels.iter().collect::<std::collections::BTreeSet<_>>().len());
    if let Some(t) = truth {
        a.metric("ari", adjusted_rand_index(labels, t));
    }
    a.svg = Some(render(&Plot::Scatter { points: plane(x), groups: Some(labels.to_vec()) }, title)?);
    Ok(a)
}

const MEANSHIFT_KEYS: &[Key] = &{
    let b = blob_keys!();
    [
        key("input", Kind::Path, None, "CSV of feature columns; omit for blobs"),
        b[0],
        b[1],
        b[2],
        b[3],
        kernel_key(),
        key("bandwidth", Kind::Float, Some("1.0"), "kernel bandwidth"),
        key("alpha", Kind::Float, Some("1.0"), "step damping in (0, 1]"),
        key("max_iter", Kind::Int, Some("500"), "iteration cap per query"),
        key("merge_radius", Kind::Float, None, "cluster merge radius; default 1e-3 x bounding diagonal"),
    ]
};

fn run_meanshift(cfg: &Config) -> CliResult<Artifacts> {
    let (x, truth) = points(cfg)?;
    let k = kernel(cfg)?;
    let opts = ShiftOptions { alpha: cfg.f64("alpha")?, max_iter: cfg.at_least("max_iter", 1)?, ..Default::default() };
    let r = mean_shift(&k, &x, &x, &opts)?;
    let radius = if cfg.is_set("merge_radius") { cfg.positive("merge_radius")? } else { 1e-3 * x.bounding_diagonal().max(1e-12) };
    let (labels, centers) = extract_clusters(&r.converged, radius)?;
    let mut a = labelled(&x, &labels, truth.as_deref(), "mean shift")?;
    a.metric("max_iterations", r.iterations.iter().copied().max().unwrap_or(0));
    a.metric("all_converged", r.converged_flags.iter().all(|c| *c));
    a.metric("centers", centers.rows().map(|c| c.to_vec()).collect::<Vec<_>>());
    let paths = r.trajectories.iter().map(|t| t.iter().map(|p| (p[0], p.get(1).copied().unwrap_or(0.0))).collect()).collect();
    a.svg = Some(render(&Plot::Trajectories { paths, background: plane(&x) }, "mean shift trajectories")?);
    Ok(a)
}

pub const MEANSHIFT: Task = Task {
    name: "cluster-meanshift",
    about: "Mean shift clustering with trajectory plot",
    keys: MEANSHIFT_KEYS,
    run: run_meanshift,
};

const MEDOIDSHIFT_KEYS: &[Key] = &{
    let b = blob_keys!();
    [
        key("input", Kind::Path, None, "CSV of feature columns; omit for blobs"),
        b[0],
        b[1],
        b[2],
        b[3],
        kernel_key(),
        key("bandwidth", Kind::Float, Some("1.0"), "kernel bandwidth"),
        key("distance", Kind::Choice(&["sqeuclidean", "euclidean"]), Some("\"sqeuclidean\""), "pairwise distance"),
        key("rounds", Kind::Int, Some("20"), "re-applications to the representatives; 0 is a single pass"),
    ]
};

fn run_medoidshift(cfg: &Config) -> CliResult<Artifacts> {
    let (x, truth) = points(cfg)?;
    let k = kernel(cfg)?;
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>();
    let eu = |a: &[f64], b: &[f64]| sq(a, b).sqrt();
    let d: &(dyn Fn(&[f64], &[f64]) -> f64 + Sync) = if cfg.str("distance")? == "euclidean" { &eu } else { &sq };
    let single = medoid_shift(&k, d, &x)?;
    let r = medoid_shift_iterated(&k, d, &x, cfg.usize("rounds")?)?;
    let mut a = labelled(&x, &r.labels, truth.as_deref(), "medoid shift")?;
    a.metric("single_pass_clusters", single.labels.iter().max().map_or(0, |m| m + 1));
    let mut medoids: Vec<usize> = r.representatives.clone();
    medoids.sort_unstable();
    medoids.dedup();
    a.metric("medoids", medoids);
    Ok(a)
}

pub const MEDOIDSHIFT: Task = Task {
    name: "cluster-medoidshift",
    about: "MedoidShift clustering over a pairwise distance",
    keys: MEDOIDSHIFT_KEYS,
    run: run_medoidshift,
};

const RELAX_KEYS: &[Key] = &{
    let b = blob_keys!();
    [
        key("input", Kind::Path, None, "CSV of feature columns; omit for blobs"),
        b[0],
        b[1],
        b[2],
        b[3],
        kernel_key(),
        key("bandwidth", Kind::Float, Some("1.0"), "kernel bandwidth"),
        key("k", Kind::Int, Some("3"), "number of classes for the k-means start"),
        key("mode", Kind::Choice(&["hard", "soft"]), Some("\"hard\""), "relaxation rule"),
        key("max_iter", Kind::Int, Some("100"), "iteration cap"),
        key("tol", Kind::Float, Some("1e-9"), "soft mode stopping tolerance"),
    ]
};

fn run_relax(cfg: &Config) -> CliResult<Artifacts> {
    let (x, truth) = points(cfg)?;
    let k = kernel(cfg)?;
    let classes = cfg.at_least("k", 1)?;
    need(classes <= x.len(), "k exceeds the number of points")?;
    let seed = cfg.seed()?;
    let start = kmeans_labels(&x, classes, seed, 100)?;
    let mode = if cfg.str("mode")? == "soft" { RelaxMode::Soft } else { RelaxMode::Hard };
    let r = relaxation_label(
        &k,
        &x,
        RelaxInit::Labels { labels: start.clone(), n_classes: classes },
        mode,
        cfg.usize("max_iter")?,
        cfg.f64("tol")?,
    )?;
    let mut a = labelled(&x, &r.labels, truth.as_deref(), "relaxation labeling")?;
    a.metric("iterations", r.iterations);
    a.metric("converged", r.converged);
    if let Some(t) = &truth {
        a.metric("ari_kmeans_start", adjusted_rand_index(&start, t));
    }
    Ok(a)
}

pub const RELAX: Task =
    Task { name: "cluster-relax", about: "Relaxation labeling from a seeded k-means start", keys: RELAX_KEYS, run: run_relax };
