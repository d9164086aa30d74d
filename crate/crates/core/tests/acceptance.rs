//! End-to-end acceptance checks. Run with `cargo test --test acceptance`;
//! prints one line per criterion and exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use locuskit::adaptive::{
    finite_diff_gradcheck, fit_qkv, tune_bandwidth, BandwidthSearch, QkvConfig, QkvObjective, TunePredictor,
};
use locuskit::density::{diffusion_generate, kde_log_gradient, tweedie_denoise, DiffusionSchedule};
use locuskit::embedding::{lle_embed, lle_objective, lle_weights, pca_embed};
use locuskit::estimators::{local_linear_predict, local_mean_predict, Fallback};
use locuskit::kernel::{gram, normalize_rows, PositionEncoding};
use locuskit::metrics::{adjusted_rand_index, r_squared, wasserstein1};
use locuskit::sequence::{
    gaussian_moving_average, nlm_denoise, CausalTemporalMean, Feedforward, Layer, Mixing, Sequence, SequenceModel, Transformer,
};
use locuskit::shift::{extract_clusters, mean_shift, medoid_shift, medoid_shift_iterated, mode_shift, ShiftOptions};
use locuskit::synth::{blobs, gaussian_mixture_1d, noisy_sine, noisy_step, swiss_roll, toy_tokens};
use locuskit::{Dataset, Kernel, PointSet, Targets};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform_points(n: usize, p: usize, lo: f64, hi: f64, r: &mut ChaCha8Rng) -> PointSet {
    PointSet::new(p, (0..n * p).map(|_| r.random_range(lo..hi)).collect()).unwrap()
}

fn random_matrix(n: usize, m: usize, r: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| r.random_range(-1.0..1.0))
}

fn score_exactness() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = r.random_range(2..=50);
        let x = uniform_points(n, 2, -3.0, 3.0, &mut r);
        let h = r.random_range(0.5..2.0);
        let d = Dataset::new(x.clone(), Some(Targets::Matrix(x.clone()))).unwrap();
        let k = Kernel::gaussian(h).unwrap();
        for _ in 0..10 {
            let q = [r.random_range(-3.0..3.0), r.random_range(-3.0..3.0)];
            let m = local_mean_predict(&k, &d, &q, Fallback::Error).unwrap();
            let g = kde_log_gradient(h, &x, &q).unwrap();
            for j in 0..2 {
                let shift = (m[j] - q[j]) / (h * h);
                worst = worst.max((shift - g[j]).abs() / g[j].abs().max(1e-12));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (worst < 1e-8 && secs < 1.0, format!("max rel. error {worst:.2e} in {secs:.3} s"))
}

fn affine_exactness() -> Outcome {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let p = r.random_range(1..=3);
        let n = r.random_range(p + 2..=30);
        let x = uniform_points(n, p, -2.0, 2.0, &mut r);
        let coef: Vec<f64> = (0..=p).map(|_| r.random_range(-3.0..3.0)).collect();
        let f = |v: &[f64]| coef[0] + v.iter().zip(&coef[1..]).map(|(a, b)| a * b).sum::<f64>();
        let d = Dataset::regression(x.clone(), x.rows().map(f).collect()).unwrap();
        let k = Kernel::gaussian(r.random_range(0.5..2.0)).unwrap();
        for (q, y) in x.rows().zip(d.real_targets().unwrap().as_slice()) {
            let fit = local_linear_predict(&k, &d, q, 0.0).unwrap();
            worst = worst.max((fit.value[0] - y).abs());
        }
    }
    (worst < 1e-9, format!("max residual {worst:.2e}"))
}

fn equivalent_kernel() -> Outcome {
    let mut r = rng(3);
    let x = uniform_points(40, 2, -2.0, 2.0, &mut r);
    let y: Vec<f64> = x.rows().map(|v| (v[0] * 1.3).sin() + v[1] * v[1] + 0.1 * r.random::<f64>()).collect();
    let d = Dataset::regression(x, y.clone()).unwrap();
    let k = Kernel::gaussian(0.8).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let q = [r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)];
        let fit = local_linear_predict(&k, &d, &q, 0.0).unwrap();
        let recon: f64 = fit.weights.iter().zip(&y).map(|(w, v)| w * v).sum();
        worst = worst.max((recon - fit.value[0]).abs());
    }
    (worst < 1e-10, format!("max gap {worst:.2e}"))
}

fn clustering() -> Outcome {
    let start = Instant::now();
    let centers = vec![vec![0.0, 0.0], vec![5.0, 0.0], vec![2.5, 4.5]];
    let (x, truth) = blobs(&centers, 300, 0.4, 4).unwrap();
    let k = Kernel::gaussian(1.0).unwrap();
    let ms = mean_shift(&k, &x, &x, &ShiftOptions::default()).unwrap();
    let (labels, found) = extract_clusters(&ms.converged, 1e-3 * x.bounding_diagonal()).unwrap();
    let ari_ms = adjusted_rand_index(&labels, &truth);
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>();
    let md = medoid_shift(&k, &sq, &x).unwrap();
    let ari_single = adjusted_rand_index(&md.labels, &truth);
    let it = medoid_shift_iterated(&k, &sq, &x, 20).unwrap();
    let ari_md = adjusted_rand_index(&it.labels, &truth);
    let secs = start.elapsed().as_secs_f64();
    (
        found.len() == 3 && ari_ms >= 0.95 && ari_md >= 0.9 && secs < 10.0,
        format!(
            "mean shift {} clusters, ARI {ari_ms:.3}; medoid shift ARI {ari_md:.3} (single pass {ari_single:.3}); {secs:.2} s",
            found.len()
        ),
    )
}

fn bandwidth_tuning() -> Outcome {
    let train = noisy_sine(100, 0.1, 5).unwrap();
    let test = noisy_sine(100, 0.1, 6).unwrap();
    let BandwidthSearch::Grid(grid) = BandwidthSearch::log_grid(0.01, 2.0, 20) else { unreachable!() };
    let tuned = tune_bandwidth(TunePredictor::LocalMean, &train, &BandwidthSearch::Grid(grid.clone())).unwrap();
    let at = grid.iter().position(|h| *h == tuned.h).unwrap();
    let truth = test.real_targets().unwrap().as_slice().to_vec();
    let r2 = |h: f64| {
        let k = Kernel::gaussian(h).unwrap();
        let pred: Vec<f64> =
            test.x.rows().map(|q| local_mean_predict(&k, &train, q, Fallback::NearestNeighbor).unwrap()[0]).collect();
        r_squared(&truth, &pred)
    };
    let (best, lo, hi) = (r2(tuned.h), r2(grid[0]), r2(grid[19]));
    let worst = lo.min(hi);
    (
        at > 0 && at < 19 && best - worst >= 0.2,
        format!("argmin h = {:.4} (grid index {at}), held-out R² {best:.3} vs endpoints {lo:.3} / {hi:.3}", tuned.h),
    )
}

fn hopfield() -> Outcome {
    // rows 1, 2, 3 of the 16×16 Sylvester-Hadamard matrix
    let pattern =
        |i: u32| -> Vec<f64> { (0..16u32).map(|j| if (i & j).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 }).collect() };
    let stored: Vec<Vec<f64>> = (1..=3).map(pattern).collect();
    let x = PointSet::from_rows(&stored).unwrap();
    let (mut total, mut ok, mut slowest) = (0, 0, 0);
    for p in &stored {
        let mut queries = vec![p.clone()];
        for a in 0..16 {
            let mut q = p.clone();
            q[a] = -q[a];
            queries.push(q.clone());
            for b in a + 1..16 {
                let mut q2 = q.clone();
                q2[b] = -q2[b];
                queries.push(q2);
            }
        }
        let res = mode_shift(&Kernel::linear(), &x, &PointSet::from_rows(&queries).unwrap(), 5).unwrap();
        for (i, got) in res.patterns.rows().enumerate() {
            total += 1;
            slowest = slowest.max(res.iterations[i]);
            if got == p.as_slice() && res.iterations[i] <= 5 {
                ok += 1;
            }
        }
    }
    (ok == total, format!("{ok}/{total} corrupted queries recalled, at most {slowest} iterations"))
}

fn tweedie() -> Outcome {
    let sigma: f64 = 0.5;
    let s2 = sigma * sigma;
    let score = |x: &[f64]| {
        let (wm, wp) = ((-(x[0] + 1.0).powi(2) / (2.0 * s2)).exp(), (-(x[0] - 1.0).powi(2) / (2.0 * s2)).exp());
        vec![(-(x[0] + 1.0) * wm - (x[0] - 1.0) * wp) / (s2 * (wm + wp))]
    };
    let mut worst: f64 = 0.0;
    for i in 0..101 {
        let x = -3.0 + 6.0 * i as f64 / 100.0;
        let got = tweedie_denoise(sigma, &score, &[x]).unwrap()[0];
        worst = worst.max((got - (x / s2).tanh()).abs());
    }
    (worst < 1e-8, format!("max error {worst:.2e} over 101 points"))
}

fn diffusion() -> Outcome {
    let start = Instant::now();
    let train = gaussian_mixture_1d(200, &[-2.0, 2.0], 0.1, 0);
    let fresh = gaussian_mixture_1d(500, &[-2.0, 2.0], 0.1, 100);
    let schedule = DiffusionSchedule::linear(20, 1e-4, 0.2).unwrap();
    let out = diffusion_generate(&PointSet::from_scalars(&train).unwrap(), &schedule, 500, None, None, 0).unwrap();
    let gen = out.column(0);
    let w1 = wasserstein1(&gen, &fresh);
    let left = gen.iter().filter(|v| **v < 0.0).count() as f64 / gen.len() as f64;
    let secs = start.elapsed().as_secs_f64();
    (
        w1 < 0.35 && (0.3..=0.7).contains(&left) && secs < 30.0,
        format!("W1 {w1:.3}, mode masses {:.1}% / {:.1}%, {secs:.2} s", 100.0 * left, 100.0 * (1.0 - left)),
    )
}

fn lle_vs_pca() -> Outcome {
    let (x, _) = swiss_roll(400, 0.05, 9).unwrap();
    let kt = lle_weights(&x, 10).unwrap();
    let lle = lle_embed(&kt, 2).unwrap();
    let pca = pca_embed(&x, 2).unwrap();
    let (a, b) = (lle_objective(&kt, &lle.z).unwrap(), lle_objective(&kt, &pca.z).unwrap());
    (a <= b, format!("objective LLE {a:.3e} vs PCA {b:.3e}"))
}

fn qkv_training() -> Outcome {
    let v = toy_tokens().to_matrix();
    let cfg = QkvConfig { seed: 7, lr: 0.1, steps: 500, ..Default::default() };
    let fit = fit_qkv(&v, None, &cfg).unwrap();
    let obj = QkvObjective::new(&v, None, &cfg).unwrap();
    let at_fit = finite_diff_gradcheck(&obj, &obj.pack(&fit.params), 1e-5).unwrap();
    let mut r = rng(10);
    let random: Vec<f64> = (0..obj.pack(&fit.params).len()).map(|_| r.random_range(-0.1..0.1)).collect();
    let err = at_fit.max(finite_diff_gradcheck(&obj, &random, 1e-5).unwrap());
    let ratio = fit.final_loss() / fit.initial_loss();
    (
        ratio < 0.5 && err < 1e-4,
        format!("loss {:.4} → {:.4} (ratio {ratio:.3}), gradcheck {err:.2e}", fit.initial_loss(), fit.final_loss()),
    )
}

fn mlp(p: usize, hidden: usize, r: &mut ChaCha8Rng) -> Feedforward {
    Feedforward::Mlp {
        w1: random_matrix(hidden, p, r),
        b1: DVector::from_fn(hidden, |_, _| r.random_range(-0.5..0.5)),
        w2: random_matrix(p, hidden, r),
        b2: DVector::from_fn(p, |_, _| r.random_range(-0.5..0.5)),
    }
}

fn qkv_layer(p: usize, r: &mut ChaCha8Rng) -> Layer {
    let d = r.random_range(1..=3);
    Layer {
        mixing: Mixing::Qkv { wq: random_matrix(p, d, r), wk: random_matrix(p, d, r), wv: random_matrix(p, p, r) },
        feedforward: mlp(p, r.random_range(1..=6), r),
    }
}

fn random_encoding(r: &mut ChaCha8Rng) -> PositionEncoding {
    match r.random_range(0..4) {
        0 => PositionEncoding::None,
        1 => PositionEncoding::Window(r.random_range(1.0..4.0)),
        2 => PositionEncoding::Sinusoidal,
        _ => PositionEncoding::RelativeFactor(Kernel::gaussian(r.random_range(0.5..3.0)).unwrap()),
    }
}

fn random_causal_model(p: usize, r: &mut ChaCha8Rng) -> Box<dyn SequenceModel> {
    match r.random_range(0..3) {
        0 => {
            let layers = (0..r.random_range(1..=3)).map(|_| qkv_layer(p, r)).collect();
            let mut t = Transformer::new(layers, true);
            t.residual = r.random();
            Box::new(t)
        }
        1 => {
            let mixing =
                Mixing::Kernel { kernel: Kernel::gaussian(r.random_range(0.5..2.0)).unwrap(), encoding: random_encoding(r) };
            Box::new(Transformer::new(vec![Layer { mixing, feedforward: mlp(p, 4, r) }, qkv_layer(p, r)], true))
        }
        _ => Box::new(CausalTemporalMean {
            kernel: Kernel::gaussian(r.random_range(0.5..2.0)).unwrap(),
            encoding: random_encoding(r),
        }),
    }
}

fn transformer() -> Outcome {
    let mut r = rng(11);
    let x = random_matrix(4, 3, &mut r);
    let layers = vec![qkv_layer(3, &mut r), qkv_layer(3, &mut r)];
    let got = Transformer::new(layers.clone(), false)
        .encode(&Sequence::new(PointSet::from_matrix(&x).unwrap(), None).unwrap())
        .unwrap()
        .tokens()
        .to_matrix();
    let mut h = x;
    for layer in &layers {
        let Mixing::Qkv { wq, wk, wv } = &layer.mixing else { unreachable!() };
        let (q, k, v) = (&h * wq, &h * wk, &h * wv);
        let scale = (wq.ncols() as f64).sqrt();
        let mut mixed = DMatrix::zeros(4, 3);
        for t in 0..4 {
            let w: Vec<f64> = (0..4).map(|s| (q.row(t).dot(&k.row(s)) / scale).exp()).collect();
            let z: f64 = w.iter().sum();
            for s in 0..4 {
                for c in 0..3 {
                    mixed[(t, c)] += w[s] / z * v[(s, c)];
                }
            }
        }
        let Feedforward::Mlp { w1, b1, w2, b2 } = &layer.feedforward else { unreachable!() };
        for t in 0..4 {
            let hidden = (w1 * mixed.row(t).transpose() + b1).map(|v| v.max(0.0));
            h.set_row(t, &(w2 * hidden + b2).transpose());
        }
    }
    let gap = (got - h).amax();
    let mut leaks = 0;
    for _ in 0..100 {
        let p = r.random_range(1..=3);
        let model = random_causal_model(p, &mut r);
        let t = r.random_range(2..10);
        let a = random_matrix(t, p, &mut r);
        let cut = r.random_range(0..t - 1);
        let mut b = a.clone();
        for s in cut + 1..t {
            for c in 0..p {
                b[(s, c)] += r.random_range(-3.0..3.0);
            }
        }
        let run = |m: &DMatrix<f64>| {
            model.forward(&Sequence::new(PointSet::from_matrix(m).unwrap(), None).unwrap()).unwrap().tokens().to_matrix()
        };
        if run(&a).rows(0, cut + 1) != run(&b).rows(0, cut + 1) {
            leaks += 1;
        }
    }
    (gap < 1e-12 && leaks == 0, format!("oracle gap {gap:.2e}; {leaks}/100 causal configurations leak"))
}

fn nlm_advantage() -> Outcome {
    let (clean, noisy) = noisy_step(200, 0.1, 12);
    let mse = |a: &[f64]| a.iter().zip(&clean).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / clean.len() as f64;
    let nlm = mse(&nlm_denoise(&noisy, None, 2, 0.1, 10).unwrap());
    let blur = mse(&gaussian_moving_average(&noisy, 10, 5.0).unwrap());
    (nlm < blur, format!("MSE NLM {nlm:.5} vs moving average {blur:.5}"))
}

fn invariants() -> Outcome {
    let mut r = rng(13);
    let mut failures = Vec::new();
    for trial in 0..50 {
        let n = r.random_range(3..25);
        let x = uniform_points(n, 2, -2.0, 2.0, &mut r);
        let y: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let d = Dataset::regression(x.clone(), y.clone()).unwrap();
        let k = Kernel::gaussian(r.random_range(0.3..2.0)).unwrap();
        let kt = normalize_rows(&gram(&k, &x, &x).unwrap()).unwrap();
        if (0..n).any(|i| (kt.values.row(i).sum() - 1.0).abs() > 1e-12) {
            failures.push(format!("stochastic rows ({trial})"));
        }
        let q = [r.random_range(-3.0..3.0), r.random_range(-3.0..3.0)];
        let m = local_mean_predict(&k, &d, &q, Fallback::NearestNeighbor).unwrap()[0];
        let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        if m < lo || m > hi {
            failures.push(format!("convex hull ({trial})"));
        }
        let c = r.random_range(0.01..100.0);
        let scaled = Kernel::multi(vec![c], vec![k.clone()]).unwrap();
        let ms = local_mean_predict(&scaled, &d, &q, Fallback::NearestNeighbor).unwrap()[0];
        if (ms - m).abs() > 1e-12 * (1.0 + m.abs()) {
            failures.push(format!("scale invariance ({trial})"));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, r.random_range(0..=i));
        }
        let opts = ShiftOptions { max_iter: 30, ..Default::default() };
        let a = mean_shift(&k, &x, &x, &opts).unwrap();
        let xp = x.select(&perm);
        let b = mean_shift(&k, &xp, &xp, &opts).unwrap();
        let same = perm
            .iter()
            .enumerate()
            .all(|(i, &p)| a.converged.row(p).iter().zip(b.converged.row(i)).all(|(u, v)| (u - v).abs() < 1e-10));
        if !same {
            failures.push(format!("permutation equivariance ({trial})"));
        }
    }
    let grid: Vec<f64> = (0..1001).map(|i| 2.0 * std::f64::consts::PI * i as f64 / 1000.0).collect();
    let f: Vec<f64> = grid.iter().map(|v| v.sin()).collect();
    let xs = PointSet::from_scalars(&grid).unwrap();
    let mut errors = Vec::new();
    for h in [0.5, 0.25, 0.1, 0.05] {
        let kt = normalize_rows(&gram(&Kernel::gaussian(h).unwrap(), &xs, &xs).unwrap()).unwrap();
        let s = kt.apply_vec(&f).unwrap();
        errors.push(s.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    if !errors.windows(2).all(|w| w[1] < w[0]) {
        failures.push("identity approximation".into());
    }
    let x0 = PointSet::from_scalars(&[0.0, 1.0, 2.0, 5.0]).unwrap();
    let s = DiffusionSchedule::linear(5, 1e-4, 0.2).unwrap();
    if diffusion_generate(&x0, &s, 20, None, None, 3).unwrap() != diffusion_generate(&x0, &s, 20, None, None, 3).unwrap() {
        failures.push("determinism".into());
    }
    if failures.is_empty() {
        (true, "stochastic rows, convex hull, scale, permutation, identity approximation, determinism".into())
    } else {
        (false, format!("violations: {}", failures.join(", ")))
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("score exactness", score_exactness),
        ("local-linear affine exactness", affine_exactness),
        ("equivalent-kernel identity", equivalent_kernel),
        ("mean shift / medoid shift clustering", clustering),
        ("bandwidth tuning", bandwidth_tuning),
        ("Hopfield recall", hopfield),
        ("Tweedie oracle", tweedie),
        ("diffusion sampling", diffusion),
        ("LLE vs PCA", lle_vs_pca),
        ("QKV training", qkv_training),
        ("transformer fidelity", transformer),
        ("NLM advantage", nlm_advantage),
    ];
    let start = Instant::now();
    let mut failed = 0;
    let mut report = |i: usize, name: &str, outcome: Outcome, took: Duration| {
        let (ok, detail) = outcome;
        failed += usize::from(!ok);
        println!("[{}] {i:>2} {name}: {detail} ({:.2} s)", if ok { "PASS" } else { "FAIL" }, took.as_secs_f64());
    };
    let run = |f: fn() -> Outcome| catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| (false, "panicked".into()));
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = run(*f);
        report(i + 1, name, outcome, t.elapsed());
    }
    let t = Instant::now();
    let (ok, detail) = run(invariants);
    let total = start.elapsed().as_secs_f64();
    report(13, "invariant suites", (ok && total < 180.0, format!("{detail}; acceptance total {total:.2} s")), t.elapsed());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
