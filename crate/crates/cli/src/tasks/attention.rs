use locuskit::adaptive::{
    attention_weights, finite_diff_gradcheck, fit_qkv, multihead_reconstruct, QkvConfig, QkvForm, QkvObjective,
};
use locuskit::kernel::PositionEncoding;
use locuskit::sequence::{autoregressive_complete, Feedforward, Layer, Mixing, Sequence, Transformer, DEFAULT_DEPTH};
use locuskit::synth::toy_tokens;
use locuskit::{Kernel, PointSet};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{cells, coord_names, need, Task};
use crate::config::{key, Config, Key, Kind};
use crate::csvio::{cell, ingest_csv, to_csv, CsvSchema};
use crate::error::CliResult;
use crate::output::Artifacts;
use crate::svg::{render, Plot};

const QKV_KEYS: &[Key] = &[
    key("input", Kind::Path, None, "CSV of value tokens; omit for six toy tokens in two blocks"),
    key("d", Kind::Int, Some("2"), "query/key feature dimension"),
    key("form", Kind::Choice(&["softmax", "linear"]), Some("\"softmax\""), "attention normalization"),
    key("lr", Kind::Float, Some("0.1"), "learning rate"),
    key("steps", Kind::Int, Some("500"), "gradient steps"),
    key("heads", Kind::Int, Some("1"), "number of heads"),
    key("causal", Kind::Bool, Some("false"), "attend only to earlier tokens"),
    key("hollow", Kind::Bool, Some("true"), "exclude each token from its own reconstruction"),
    key("learn_values", Kind::Bool, Some("false"), "also learn the value tokens"),
];

fn qkv_config(cfg: &Config) -> CliResult<QkvConfig> {
    Ok(QkvConfig {
        d: cfg.at_least("d", 1)?,
        form: if cfg.str("form")? == "linear" { QkvForm::Linear } else { QkvForm::Softmax },
        lr: cfg.positive("lr")?,
        steps: cfg.at_least("steps", 1)?,
        seed: cfg.seed()?,
        heads: cfg.at_least("heads", 1)?,
        learn_values: cfg.bool("learn_values")?,
        causal: cfg.bool("causal")?,
        hollow: cfg.bool("hollow")?,
        positions: None,
    })
}

fn run_qkv(cfg: &Config) -> CliResult<Artifacts> {
    let x = match cfg.path("input") {
        Some(p) => ingest_csv(&p, CsvSchema::FeaturesOnly)?.into_dataset().x,
        None => toy_tokens(),
    };
    let qc = qkv_config(cfg)?;
    let v = x.to_matrix();
    let fit = fit_qkv(&v, None, &qc)?;
    let obj = QkvObjective::new(&v, None, &qc)?;
    let grad_err = finite_diff_gradcheck(&obj, &obj.pack(&fit.params), 1e-5)?;
    let rec = multihead_reconstruct(&fit.params, &x)?;
    let mut a = Artifacts { header: [coord_names("v", x.dim()), coord_names("r", x.dim())].concat(), ..Default::default() };
    a.rows = x.rows().zip(rec.rows()).map(|(v, r)| [cells(v), cells(r)].concat()).collect();
    a.metric("n", x.len());
    a.metric("initial_loss", fit.initial_loss());
    a.metric("final_loss", fit.final_loss());
    a.metric("loss_ratio", fit.final_loss() / fit.initial_loss());
    a.metric("gradcheck_error", grad_err);
    let w = attention_weights(&fit.params, 0, qc.hollow)?;
    let rows: Vec<Vec<String>> = w.row_iter().map(|r| r.iter().map(|v| cell(*v)).collect()).collect();
    a.extra.push(("attention.csv".into(), to_csv(&coord_names("k", w.ncols()), &rows)?));
    let trace = fit.trace.iter().enumerate().map(|(i, l)| (i as f64, *l)).collect();
    a.svg = Some(render(&Plot::Lines { series: vec![("loss".into(), trace)] }, "attention training loss")?);
    Ok(a)
}

pub const QKV: Task =
    Task { name: "fit-qkv", about: "Train query/key features by self-reconstruction", keys: QKV_KEYS, run: run_qkv };

const TRANSFORMER_KEYS: &[Key] = &[
    key("input", Kind::Path, None, "sequence CSV (time, features...); omit for a sampled circle"),
    key("length", Kind::Int, Some("12"), "synthetic: prefix length"),
    key("depth", Kind::Int, None, "number of layers; default 6"),
    key("d", Kind::Int, Some("2"), "query/key width of attention layers"),
    key("hidden", Kind::Int, Some("8"), "feedforward hidden width; 0 for identity"),
    key("causal", Kind::Bool, Some("true"), "causal masking"),
    key("residual", Kind::Bool, Some("false"), "residual connections"),
    key("mixing", Kind::Choice(&["qkv", "kernel"]), Some("\"qkv\""), "random attention or a fixed Gaussian temporal mean"),
    key("bandwidth", Kind::Float, Some("1.0"), "kernel mixing: Gaussian bandwidth"),
    key(
        "encoding",
        Kind::Choice(&["none", "window", "sinusoidal", "relative"]),
        Some("\"none\""),
        "kernel mixing: position encoding",
    ),
    key("window", Kind::Float, Some("3.0"), "window encoding width, or relative-factor bandwidth"),
    key("complete", Kind::Int, Some("0"), "autoregressive completion steps (needs causal)"),
];

fn random_matrix(r: usize, c: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let s = 1.0 / (r as f64).sqrt();
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-s..s))
}

fn encoding(cfg: &Config) -> CliResult<PositionEncoding> {
    Ok(match cfg.str("encoding")? {
        "window" => PositionEncoding::Window(cfg.positive("window")?),
        "sinusoidal" => PositionEncoding::Sinusoidal,
        "relative" => PositionEncoding::RelativeFactor(Kernel::gaussian(cfg.positive("window")?)?),
        _ => PositionEncoding::None,
    })
}

fn run_transformer(cfg: &Config) -> CliResult<Artifacts> {
    let prefix = match cfg.path("input") {
        Some(p) => ingest_csv(&p, CsvSchema::Sequence)?.into_sequence(),
        None => {
            let n = cfg.at_least("length", 1)?;
            let rows: Vec<[f64; 2]> = (0..n).map(|t| [(t as f64 / 2.0).cos(), (t as f64 / 2.0).sin()]).collect();
            Sequence::new(PointSet::from_rows(&rows)?, None)?
        }
    };
    let p = prefix.dim();
    let (d, hidden) = (cfg.at_least("d", 1)?, cfg.usize("hidden")?);
    let causal = cfg.bool("causal")?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed()?);
    let depth = if cfg.is_set("depth") { cfg.at_least("depth", 1)? } else { DEFAULT_DEPTH };
    let kernel_mixing = cfg.str("mixing")? == "kernel";
    let mut layers = Vec::with_capacity(depth);
    for _ in 0..depth {
        let mixing = if kernel_mixing {
            Mixing::Kernel { kernel: Kernel::gaussian(cfg.positive("bandwidth")?)?, encoding: encoding(cfg)? }
        } else {
            Mixing::Qkv {
                wq: random_matrix(p, d, &mut rng),
                wk: random_matrix(p, d, &mut rng),
                wv: random_matrix(p, p, &mut rng),
            }
        };
        let feedforward = if hidden == 0 {
            Feedforward::Identity
        } else {
            Feedforward::Mlp {
                w1: random_matrix(hidden, p, &mut rng),
                b1: DVector::from_fn(hidden, |_, _| rng.random_range(-0.1..0.1)),
                w2: random_matrix(p, hidden, &mut rng),
                b2: DVector::from_fn(p, |_, _| rng.random_range(-0.1..0.1)),
            }
        };
        layers.push(Layer { mixing, feedforward });
    }
    let mut model = Transformer::new(layers, causal);
    model.residual = cfg.bool("residual")?;
    let out = model.encode(&prefix)?;
    let steps = cfg.usize("complete")?;
    let completed = if steps > 0 {
        need(causal, "completion needs a causal model")?;
        Some(autoregressive_complete(&prefix, &model, steps)?)
    } else {
        None
    };
    let mut a = Artifacts {
        header: [vec!["t".into(), "part".into()], coord_names("x", p), coord_names("y", p)].concat(),
        ..Default::default()
    };
    for i in 0..prefix.len() {
        a.rows.push(
            [vec![cell(prefix.times()[i]), "prefix".into()], cells(prefix.tokens().row(i)), cells(out.tokens().row(i))].concat(),
        );
    }
    if let Some(c) = &completed {
        for i in prefix.len()..c.len() {
            let row = c.tokens().row(i);
            a.rows.push([vec![cell(c.times()[i]), "completion".into()], cells(row), cells(row)].concat());
        }
    }
    a.metric("length", prefix.len());
    a.metric("depth", depth);
    a.metric("causal", causal);
    a.metric("completed", steps);
    a.metric("max_abs_output", out.tokens().as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let trace = |s: &Sequence| s.tokens().rows().map(|r| (r[0], r.get(1).copied().unwrap_or(0.0))).collect::<Vec<_>>();
    let mut series = vec![("prefix".to_string(), trace(&prefix)), ("encoded".to_string(), trace(&out))];
    if let Some(c) = &completed {
        series.push(("completion".to_string(), trace(c)[prefix.len() - 1..].to_vec()));
    }
    a.svg = Some(render(&Plot::Lines { series }, "transformer tokens")?);
    Ok(a)
}

pub const TRANSFORMER: Task = Task {
    name: "transformer-demo",
    about: "Random-weight transformer pass and autoregressive completion",
    keys: TRANSFORMER_KEYS,
    run: run_transformer,
};
