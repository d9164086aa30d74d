use locuskit::adaptive::{
    attention_weights, finite_diff_gradcheck, fit_multikernel, fit_qkv, multihead_reconstruct, multikernel_objective,
    softmax_rows, tune_bandwidth, BandwidthSearch, Differentiable, QkvConfig, QkvForm, QkvHead, QkvObjective, QkvParams,
    TunePredictor,
};
use locuskit::synth::{noisy_sine, toy_tokens};
use locuskit::{Dataset, Kernel, PointSet};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(n: usize, m: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0))
}

#[test]
fn constant_target_picks_the_smallest_bandwidth() {
    let x = PointSet::from_scalars(&[0.0, 0.4, 1.1, 2.0, 2.2]).unwrap();
    let d = Dataset::regression(x, vec![3.0; 5]).unwrap();
    let r = tune_bandwidth(TunePredictor::LocalMean, &d, &BandwidthSearch::log_grid(0.1, 10.0, 7)).unwrap();
    assert_eq!(r.h, 0.1);
    assert!(r.curve.iter().all(|(_, l)| *l < 1e-25), "{:?}", r.curve);
}

#[test]
fn two_points_are_bandwidth_free() {
    let d = Dataset::regression(PointSet::from_scalars(&[0.0, 1.0]).unwrap(), vec![1.0, -1.0]).unwrap();
    let r = tune_bandwidth(TunePredictor::LocalMean, &d, &BandwidthSearch::log_grid(0.2, 5.0, 9)).unwrap();
    assert_eq!(r.h, 0.2);
    assert!(r.curve.iter().all(|(_, l)| (l - 8.0).abs() < 1e-12));
}

#[test]
fn tuned_loss_is_the_smallest_evaluated() {
    let d = noisy_sine(60, 0.1, 2).unwrap();
    for predictor in [TunePredictor::LocalMean, TunePredictor::LocalLinear { lambda: 1e-6 }, TunePredictor::KdeLoo] {
        for search in [BandwidthSearch::log_grid(0.01, 2.0, 15), BandwidthSearch::Golden { lo: 0.01, hi: 2.0 }] {
            let r = tune_bandwidth(predictor, &d, &search).unwrap();
            assert!(r.curve.iter().all(|(_, l)| r.loss <= *l), "{predictor:?}");
            assert!(r.curve.iter().any(|(h, l)| *h == r.h && *l == r.loss));
            assert!(r.h >= 0.01 && r.h <= 2.0);
        }
    }
}

#[test]
fn golden_search_agrees_with_a_fine_grid() {
    let d = noisy_sine(80, 0.1, 5).unwrap();
    let grid = tune_bandwidth(TunePredictor::LocalMean, &d, &BandwidthSearch::log_grid(0.02, 2.0, 200)).unwrap();
    let golden = tune_bandwidth(TunePredictor::LocalMean, &d, &BandwidthSearch::Golden { lo: 0.02, hi: 2.0 }).unwrap();
    assert!((golden.h / grid.h).ln().abs() < 0.05, "{} vs {}", golden.h, grid.h);
    assert!(golden.loss <= grid.loss * (1.0 + 1e-3));
}

fn kernels() -> Vec<Kernel> {
    vec![Kernel::gaussian(0.05).unwrap(), Kernel::gaussian(0.3).unwrap(), Kernel::gaussian(2.0).unwrap(), Kernel::uniform()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn multikernel_weights_are_on_the_simplex(seed in 0u64..1000) {
        let d = noisy_sine(30, 0.2, seed).unwrap();
        let ks = kernels();
        let fit = fit_multikernel(&ks, &d).unwrap();
        prop_assert!(fit.weights.iter().all(|w| *w >= 0.0));
        prop_assert!((fit.weights.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        for m in 0..ks.len() {
            let mut e = vec![0.0; ks.len()];
            e[m] = 1.0;
            prop_assert!(fit.objective <= multikernel_objective(&ks, &d, &e).unwrap() + 1e-9);
        }
        let direct = multikernel_objective(&ks, &d, &fit.weights).unwrap();
        prop_assert!((direct - fit.objective).abs() < 1e-9 * direct.max(1.0));
    }
}

#[test]
fn bi_kernel_with_dirac_beats_both_vertices() {
    let d = noisy_sine(50, 0.3, 11).unwrap();
    let ks = vec![Kernel::gaussian(0.3).unwrap(), Kernel::dirac()];
    let fit = fit_multikernel(&ks, &d).unwrap();
    let scan: Vec<f64> =
        (0..=1000).map(|i| multikernel_objective(&ks, &d, &[i as f64 / 1000.0, 1.0 - i as f64 / 1000.0]).unwrap()).collect();
    let best = scan.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(fit.objective <= best + 1e-9);
    assert!(fit.objective <= scan[0] && fit.objective <= scan[1000]);
    assert!(fit.kkt_residual < 1e-8);
}

#[test]
fn uniform_features_give_column_means() {
    let v = toy_tokens().to_matrix();
    let cfg = QkvConfig { hollow: false, ..Default::default() };
    let obj = QkvObjective::new(&v, None, &cfg).unwrap();
    let params = vec![0.0; obj.n_params()];
    let qp = obj.unpack(&params);
    let a = attention_weights(&qp, 0, false).unwrap();
    assert!(a.iter().all(|w| (w - 1.0 / v.nrows() as f64).abs() < 1e-15));
    let variance: f64 = (0..v.ncols())
        .map(|c| {
            let col = v.column(c);
            let mean = col.mean();
            col.iter().map(|x| (x - mean).powi(2)).sum::<f64>()
        })
        .sum();
    assert!((obj.value(&params) - variance).abs() < 1e-12);
}

#[test]
fn default_training_never_ends_worse() {
    let v = toy_tokens().to_matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let target = random_matrix(v.nrows(), 3, &mut rng);
    let configs = [
        QkvConfig::default(),
        QkvConfig { form: QkvForm::Linear, ..Default::default() },
        QkvConfig { causal: true, ..Default::default() },
        QkvConfig { heads: 2, learn_values: true, ..Default::default() },
    ];
    for cfg in &configs {
        let fit = fit_qkv(&v, None, cfg).unwrap();
        assert!(fit.final_loss() <= fit.initial_loss(), "{cfg:?}");
        assert_eq!(fit.trace.len(), cfg.steps + 1);
    }
    let fit = fit_qkv(&v, Some(&target), &QkvConfig::default()).unwrap();
    assert!(fit.final_loss() <= fit.initial_loss());
}

#[test]
fn gradients_pass_the_gate_everywhere() {
    let v = toy_tokens().to_matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let target = random_matrix(v.nrows(), 3, &mut rng);
    let positions = random_matrix(v.nrows(), 2, &mut rng);
    for form in [QkvForm::Softmax, QkvForm::Linear] {
        for causal in [false, true] {
            for decoded in [false, true] {
                let cfg = QkvConfig {
                    form,
                    causal,
                    heads: 2,
                    learn_values: true,
                    positions: Some(positions.clone()),
                    ..Default::default()
                };
                let obj = QkvObjective::new(&v, decoded.then_some(&target), &cfg).unwrap();
                let params: Vec<f64> = (0..obj.n_params()).map(|_| rng.random_range(-0.5..0.5)).collect();
                let err = finite_diff_gradcheck(&obj, &params, 1e-5).unwrap();
                assert!(err < 1e-4, "{form:?} causal={causal} decoded={decoded}: {err}");
            }
        }
    }
}

fn head(rng: &mut ChaCha8Rng) -> QkvHead {
    QkvHead {
        phi: random_matrix(4, 2, rng),
        psi: random_matrix(4, 2, rng),
        values: random_matrix(4, 2, rng),
        decoder: Some(random_matrix(3, 2, rng)),
    }
}

#[test]
fn two_head_reconstruction_matches_hand_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let heads = vec![head(&mut rng), head(&mut rng)];
    let x = PointSet::new(3, vec![0.0; 12]).unwrap();
    let params = QkvParams { form: QkvForm::Softmax, heads: heads.clone(), positions: None, causal: false };
    let got = multihead_reconstruct(&params, &x).unwrap().to_matrix();
    let mut expect = DMatrix::zeros(4, 3);
    for h in &heads {
        let logits = &h.phi * h.psi.transpose() / 2f64.sqrt();
        let mut a = DMatrix::zeros(4, 4);
        for i in 0..4 {
            let z: f64 = (0..4).map(|j| logits[(i, j)].exp()).sum();
            for j in 0..4 {
                a[(i, j)] = logits[(i, j)].exp() / z;
            }
        }
        expect += a * &h.values * h.decoder.as_ref().unwrap().transpose();
    }
    expect /= 2.0;
    assert!((got - expect).amax() < 1e-12);
}

#[test]
fn opposite_decoders_cancel() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let h1 = head(&mut rng);
    let mut h2 = h1.clone();
    h2.decoder = h1.decoder.as_ref().map(|w| -w);
    let params = QkvParams { form: QkvForm::Linear, heads: vec![h1, h2], positions: None, causal: false };
    let out = multihead_reconstruct(&params, &PointSet::new(3, vec![1.0; 12]).unwrap()).unwrap();
    assert!(out.as_slice().iter().all(|v| v.abs() < 1e-15));
}

proptest! {
    #[test]
    fn softmax_rows_ignore_row_shifts(vals in prop::collection::vec(-20.0..20.0f64, 12), shift in prop::collection::vec(-50.0..50.0f64, 3)) {
        let z = DMatrix::from_row_slice(3, 4, &vals);
        let shifted = DMatrix::from_fn(3, 4, |i, j| z[(i, j)] + shift[i]);
        let a = softmax_rows(&z, &|_, _| true);
        let b = softmax_rows(&shifted, &|_, _| true);
        for i in 0..3 {
            prop_assert!((a.row(i).sum() - 1.0).abs() < 1e-12);
        }
        prop_assert!((a - b).amax() < 1e-12);
    }
}
