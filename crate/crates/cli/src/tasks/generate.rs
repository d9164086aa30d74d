use locuskit::density::{diffusion_generate, DiffusionSchedule};
use locuskit::metrics::{mse, wasserstein1};
use locuskit::sequence::{gaussian_moving_average, nlm_denoise};
use locuskit::synth::{gaussian_mixture_1d, noisy_step};
use locuskit::PointSet;

use super::{need, Task};
use crate::config::{key, Config, Key, Kind};
use crate::csvio::{cell, ingest_csv, CsvSchema};
use crate::error::CliResult;
use crate::output::Artifacts;
use crate::pgm::{encode_pgm, read_pgm, Image};
use crate::svg::{render, Plot};

const DIFFUSION_KEYS: &[Key] = &[
    key("input", Kind::Path, None, "single-column CSV of training samples; omit for a two-mode mixture"),
    key("n", Kind::Int, Some("200"), "synthetic: training sample size"),
    key("means", Kind::Floats, Some("[-2.0, 2.0]"), "synthetic: mixture means"),
    key("variance", Kind::Float, Some("0.1"), "synthetic: common component variance"),
    key("steps", Kind::Int, Some("20"), "noising steps"),
    key("beta_start", Kind::Float, Some("1e-4"), "first step variance"),
    key("beta_end", Kind::Float, Some("0.2"), "last step variance"),
    key("samples", Kind::Int, Some("500"), "number of generated samples"),
    key("alpha", Kind::Float, Some("0.8"), "damping of each denoising step in (0, 1]"),
];

/// Histogram outline with `bins` cells over [lo, hi].
fn histogram(v: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<(f64, f64)> {
    let mut c = vec![0.0; bins];
    let w = (hi - lo) / bins as f64;
    for x in v {
        let b = (((x - lo) / w) as isize).clamp(0, bins as isize - 1) as usize;
        c[b] += 1.0;
    }
    let total = v.len().max(1) as f64 * w;
    c.iter().enumerate().map(|(i, n)| (lo + (i as f64 + 0.5) * w, n / total)).collect()
}

fn run_diffusion(cfg: &Config) -> CliResult<Artifacts> {
    let seed = cfg.seed()?;
    let (train, reference) = match cfg.path("input") {
        Some(p) => {
            let x = ingest_csv(&p, CsvSchema::FeaturesOnly)?.into_dataset().x;
            need(x.dim() == 1, "diffusion input must have a single column")?;
            (x.column(0), None)
        }
        None => {
            let means = cfg.floats("means").unwrap_or_default();
            need(!means.is_empty(), "means must be non-empty")?;
            let var = cfg.positive("variance")?;
            let n = cfg.at_least("n", 1)?;
            let samples = cfg.at_least("samples", 1)?;
            (gaussian_mixture_1d(n, &means, var, seed), Some(gaussian_mixture_1d(samples, &means, var, seed.wrapping_add(1))))
        }
    };
    let steps = cfg.at_least("steps", 1)?;
    let schedule = DiffusionSchedule::linear(steps, cfg.f64("beta_start")?, cfg.f64("beta_end")?)?;
    let alpha = vec![cfg.f64("alpha")?; steps];
    let out = diffusion_generate(
        &PointSet::from_scalars(&train)?,
        &schedule,
        cfg.at_least("samples", 1)?,
        Some(&alpha),
        None,
        seed.wrapping_add(2),
    )?;
    let gen = out.column(0);
    let mut a = Artifacts::default();
    a.table(&["sample"], gen.iter().map(|v| vec![cell(*v)]).collect());
    a.metric("n_train", train.len());
    a.metric("n_generated", gen.len());
    a.metric("w1_train", wasserstein1(&gen, &train));
    if let Some(r) = &reference {
        a.metric("w1_fresh", wasserstein1(&gen, r));
    }
    a.metric("fraction_below_zero", gen.iter().filter(|v| **v < 0.0).count() as f64 / gen.len() as f64);
    let (lo, hi) = train.iter().chain(&gen).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
    let series =
        vec![("train".to_string(), histogram(&train, lo, hi, 40)), ("generated".to_string(), histogram(&gen, lo, hi, 40))];
    a.svg = Some(render(&Plot::Lines { series }, "kernel diffusion samples")?);
    Ok(a)
}

pub const DIFFUSION: Task = Task {
    name: "generate-diffusion",
    about: "Generative diffusion with local-mean denoising",
    keys: DIFFUSION_KEYS,
    run: run_diffusion,
};

const NLM_KEYS: &[Key] = &[
    key("input", Kind::Path, None, "sequence CSV (time, value); omit for a noisy step"),
    key("image", Kind::Path, None, "binary PGM image to denoise instead of a sequence"),
    key("length", Kind::Int, Some("200"), "synthetic: step signal length"),
    key("noise", Kind::Float, Some("0.1"), "synthetic: noise standard deviation"),
    key("rho", Kind::Int, Some("2"), "patch radius"),
    key("h", Kind::Float, Some("0.1"), "patch-distance bandwidth"),
    key("search", Kind::Int, Some("10"), "search window radius"),
    key("ma_radius", Kind::Int, Some("10"), "baseline Gaussian moving average radius"),
    key("ma_sigma", Kind::Float, Some("5.0"), "baseline Gaussian moving average width"),
];

fn run_nlm(cfg: &Config) -> CliResult<Artifacts> {
    need(!(cfg.is_set("input") && cfg.is_set("image")), "give either input or image, not both")?;
    let (rho, h, search) = (cfg.usize("rho")?, cfg.positive("h")?, cfg.usize("search")?);
    let mut a = Artifacts::default();
    if let Some(p) = cfg.path("image") {
        let img = read_pgm(&p)?;
        let out = nlm_denoise(&img.pixels, Some(img.width), rho, h, search)?;
        a.table(
            &["pixel", "noisy", "nlm"],
            (0..out.len()).map(|i| vec![i.to_string(), cell(img.pixels[i]), cell(out[i])]).collect(),
        );
        a.metric("width", img.width);
        a.metric("height", img.height);
        a.metric("mse_change", mse(&img.pixels, &out));
        let den = Image { width: img.width, height: img.height, pixels: out };
        a.extra.push(("denoised.pgm".into(), encode_pgm(&den)));
        return Ok(a);
    }
    let (clean, noisy) = match cfg.path("input") {
        Some(p) => {
            let s = ingest_csv(&p, CsvSchema::Sequence)?.into_sequence();
            need(s.dim() == 1, "sequence input must have one value column")?;
            (None, s.tokens().column(0))
        }
        None => {
            let len = cfg.at_least("length", 2)?;
            let (c, n) = noisy_step(len, cfg.f64("noise")?, cfg.seed()?);
            (Some(c), n)
        }
    };
    let nlm = nlm_denoise(&noisy, None, rho, h, search)?;
    let ma = gaussian_moving_average(&noisy, cfg.usize("ma_radius")?, cfg.positive("ma_sigma")?)?;
    let mut head = vec!["t", "noisy", "nlm", "moving_average"];
    if clean.is_some() {
        head.push("clean");
    }
    let rows = (0..noisy.len())
        .map(|i| {
            let mut r = vec![i.to_string(), cell(noisy[i]), cell(nlm[i]), cell(ma[i])];
            if let Some(c) = &clean {
                r.push(cell(c[i]));
            }
            r
        })
        .collect();
    a.table(&head, rows);
    a.metric("length", noisy.len());
    match &clean {
        Some(c) => {
            a.metric("mse_noisy", mse(&noisy, c));
            a.metric("mse_nlm", mse(&nlm, c));
            a.metric("mse_moving_average", mse(&ma, c));
        }
        None => {
            a.metric("mse_change_nlm", mse(&noisy, &nlm));
            a.metric("mse_change_moving_average", mse(&noisy, &ma));
        }
    }
    let line = |v: &[f64]| v.iter().enumerate().map(|(i, y)| (i as f64, *y)).collect::<Vec<_>>();
    let mut series = vec![("noisy".into(), line(&noisy)), ("nlm".into(), line(&nlm)), ("moving average".into(), line(&ma))];
    if let Some(c) = &clean {
        series.push(("clean".into(), line(c)));
    }
    a.svg = Some(render(&Plot::Lines { series }, "non-local means")?);
    Ok(a)
}

pub const NLM: Task =
    Task { name: "denoise-nlm", about: "Non-local means denoising of a sequence or image", keys: NLM_KEYS, run: run_nlm };
