use locuskit::embedding::{
    amds_factorize, cooccurrence_embed, lle_embed, lle_objective, lle_weights, pca_embed, sliding_windows, trimap_embed,
    AmdsMethod, TrimapLoss, TrimapOptions,
};
use locuskit::kernel::gram;
use locuskit::synth::swiss_roll;
use locuskit::PointSet;

use super::{blob_keys, cells, coord_names, kernel, kernel_key, need, synthetic_blobs, Task};
use crate::config::{key, Config, Key, Kind};
use crate::csvio::{cell, ingest_csv, CsvSchema};
use crate::error::{CliError, CliResult};
use crate::output::Artifacts;
use crate::svg::{render, Plot};

fn embedding_artifacts(
    z: &PointSet,
    extra: Option<(&str, &[f64])>,
    groups: Option<Vec<usize>>,
    title: &str,
) -> CliResult<Artifacts> {
    let mut a = Artifacts::default();
    let mut head = coord_names("z", z.dim());
    if let Some((name, _)) = extra {
        head.push(name.to_string());
    }
    a.header = head;
    a.rows = z
        .rows()
        .enumerate()
        .map(|(i, r)| {
            let mut row = cells(r);
            if let Some((_, v)) = extra {
                row.push(cell(v[i]));
            }
            row
        })
        .collect();
    let pts = z.rows().map(|r| (r[0], r.get(1).copied().unwrap_or(0.0))).collect();
    a.svg = Some(render(&Plot::Scatter { points: pts, groups }, title)?);
    Ok(a)
}

/// Bins a scalar into eight colors for plotting.
fn bins(v: &[f64]) -> Vec<usize> {
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
    v.iter().map(|x| if hi > lo { ((x - lo) / (hi - lo) * 7.999) as usize } else { 0 }).collect()
}

const LLE_KEYS: &[Key] = &[
    key("input", Kind::Path, None, "CSV of feature columns; omit for a swiss roll"),
    key("n", Kind::Int, Some("400"), "synthetic: number of points"),
    key("noise", Kind::Float, Some("0.05"), "synthetic: jitter standard deviation"),
    key("neighbors", Kind::Int, Some("10"), "reconstruction neighbors per point"),
    key("dim", Kind::Int, Some("2"), "embedding dimension"),
];

fn run_lle(cfg: &Config) -> CliResult<Artifacts> {
    let (x, t) = match cfg.path("input") {
        Some(p) => (ingest_csv(&p, CsvSchema::FeaturesOnly)?.into_dataset().x, None),
        None => {
            let (x, t) = swiss_roll(cfg.at_least("n", 4)?, cfg.f64("noise")?, cfg.seed()?)?;
            (x, Some(t))
        }
    };
    let r = cfg.at_least("dim", 1)?;
    let kt = lle_weights(&x, cfg.at_least("neighbors", 1)?)?;
    let lle = lle_embed(&kt, r)?;
    let pca = pca_embed(&x, r.min(x.dim()))?;
    let groups = t.as_deref().map(bins);
    let mut a = embedding_artifacts(&lle.z, t.as_deref().map(|t| ("t", t)), groups, "locally linear embedding")?;
    a.metric("n", x.len());
    a.metric("objective_lle", lle_objective(&kt, &lle.z)?);
    a.metric("objective_pca", lle_objective(&kt, &pca.z)?);
    Ok(a)
}

pub const LLE: Task =
    Task { name: "embed-lle", about: "Locally linear embedding (compared with PCA)", keys: LLE_KEYS, run: run_lle };

const AMDS_KEYS: &[Key] = &{
    let b = blob_keys!();
    [
        key("input", Kind::Path, None, "CSV of feature columns; omit for blobs"),
        b[0],
        b[1],
        b[2],
        b[3],
        kernel_key(),
        key("bandwidth", Kind::Float, Some("1.0"), "kernel bandwidth of the factorized gram"),
        key("rank", Kind::Int, Some("2"), "factorization rank"),
        key("method", Kind::Choice(&["svd", "nmf"]), Some("\"svd\""), "truncated SVD or non-negative factorization"),
        key("iters", Kind::Int, Some("200"), "NMF sweeps"),
    ]
};

fn run_amds(cfg: &Config) -> CliResult<Artifacts> {
    let (x, groups) = match cfg.path("input") {
        Some(p) => (ingest_csv(&p, CsvSchema::FeaturesOnly)?.into_dataset().x, None),
        None => {
            let (x, l) = synthetic_blobs(cfg)?;
            (x, Some(l))
        }
    };
    let g = gram(&kernel(cfg)?, &x, &x)?;
    let method = if cfg.str("method")? == "nmf" { AmdsMethod::Nmf } else { AmdsMethod::Svd };
    let r = amds_factorize(&g.values, cfg.at_least("rank", 1)?, method, cfg.usize("iters")?)?;
    let z = PointSet::from_matrix(&r.phi)?;
    let mut a = embedding_artifacts(&z, None, groups, "asymmetric MDS (query factor)")?;
    a.metric("n", x.len());
    a.metric("strain", r.strain);
    a.metric("relative_strain", r.strain / g.values.norm_squared());
    a.metric("trace_len", r.trace.len());
    Ok(a)
}

pub const AMDS: Task =
    Task { name: "embed-amds", about: "Low-rank factorization of a kernel gram", keys: AMDS_KEYS, run: run_amds };

const TRIMAP_KEYS: &[Key] = &{
    let b = blob_keys!();
    [
        key("input", Kind::Path, None, "CSV of feature columns; omit for blobs"),
        b[0],
        b[1],
        b[2],
        b[3],
        key("bandwidth", Kind::Float, Some("1.0"), "Gaussian similarity bandwidth"),
        key("dim", Kind::Int, Some("2"), "embedding dimension"),
        key("loss", Kind::Choice(&["identity", "log1p"]), Some("\"log1p\""), "increasing link on distance differences"),
        key("steps", Kind::Int, Some("200"), "gradient steps"),
        key("lr", Kind::Float, Some("0.05"), "learning rate"),
        key("budget", Kind::Int, Some("20000"), "use all N^3 triplets when they fit, else 10 neighbors x 10 random per anchor"),
    ]
};

fn run_trimap(cfg: &Config) -> CliResult<Artifacts> {
    let (x, groups) = match cfg.path("input") {
        Some(p) => (ingest_csv(&p, CsvSchema::FeaturesOnly)?.into_dataset().x, None),
        None => {
            let (x, l) = synthetic_blobs(cfg)?;
            (x, Some(l))
        }
    };
    let h = cfg.positive("bandwidth")?;
    let sim = move |a: &[f64], b: &[f64]| (-a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>() / (2.0 * h * h)).exp();
    let opts = TrimapOptions {
        dim: cfg.at_least("dim", 1)?,
        loss: if cfg.str("loss")? == "identity" { TrimapLoss::Identity } else { TrimapLoss::Log1p },
        steps: cfg.at_least("steps", 1)?,
        lr: cfg.positive("lr")?,
        seed: cfg.seed()?,
        budget: cfg.at_least("budget", 1)?,
    };
    let r = trimap_embed(&x, &sim, &opts)?;
    let mut a = embedding_artifacts(&r.z, None, groups, "triplet embedding")?;
    a.metric("n", x.len());
    a.metric("objective", r.objective);
    a.metric("first_step_objective", r.trace[0]);
    Ok(a)
}

pub const TRIMAP: Task = Task { name: "embed-trimap", about: "Triplet contrast embedding", keys: TRIMAP_KEYS, run: run_trimap };

const WORDS_KEYS: &[Key] = &[
    key("input", Kind::Path, None, "plain-text corpus (required)"),
    key("window", Kind::Int, Some("5"), "sliding window length in tokens"),
    key("dim", Kind::Int, Some("2"), "embedding dimension"),
];

fn run_words(cfg: &Config) -> CliResult<Artifacts> {
    let path = cfg.path("input").ok_or_else(|| CliError::validation("embed-words needs an input corpus"))?;
    let text =
        std::fs::read_to_string(&path).map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    let windows = sliding_windows(&text, cfg.at_least("window", 2)?);
    need(!windows.is_empty(), "corpus has no tokens")?;
    let e = cooccurrence_embed(&windows, cfg.at_least("dim", 1)?)?;
    let mut a = Artifacts {
        header: [vec!["word".into(), "count".into()], coord_names("v", e.input.ncols())].concat(),
        ..Default::default()
    };
    a.rows = e
        .vocab
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let mut row = vec![w.clone(), cell(e.counts.row(i).sum())];
            row.extend(e.input.row(i).iter().map(|v| cell(*v)));
            row
        })
        .collect();
    a.metric("vocabulary", e.vocab.len());
    a.metric("windows", windows.len());
    let pts = (0..e.vocab.len()).map(|i| (e.input[(i, 0)], if e.input.ncols() > 1 { e.input[(i, 1)] } else { 0.0 })).collect();
    a.svg = Some(render(&Plot::Scatter { points: pts, groups: None }, "word vectors")?);
    Ok(a)
}

pub const WORDS: Task =
    Task { name: "embed-words", about: "Co-occurrence word vectors by truncated SVD", keys: WORDS_KEYS, run: run_words };
