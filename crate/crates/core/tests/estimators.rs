use std::sync::Arc;

use locuskit::estimators::{
    inference_precompute, inference_predict, knn_predict, local_centerless_classify, local_fit, local_linear_predict,
    local_mean_predict, local_mode_predict, Fallback, Loss, Prediction,
};
use locuskit::kernel::{Kernel, Relation};
use locuskit::{Dataset, PointSet};
use proptest::prelude::*;

fn regression(max: usize) -> impl Strategy<Value = (Dataset, Vec<f64>)> {
    (3..=max).prop_flat_map(|n| {
        (
            prop::collection::vec(-4.0..4.0f64, n * 2),
            prop::collection::vec(-10.0..10.0f64, n),
            prop::collection::vec(-4.0..4.0f64, 2),
        )
            .prop_map(|(x, y, q)| (Dataset::regression(PointSet::new(2, x).unwrap(), y).unwrap(), q))
    })
}

fn classification(max: usize) -> impl Strategy<Value = (Dataset, Vec<f64>)> {
    (4..=max).prop_flat_map(|n| {
        (prop::collection::vec(-4.0..4.0f64, n * 2), prop::collection::vec(0..3usize, n), prop::collection::vec(-4.0..4.0f64, 2))
            .prop_map(|(x, mut y, q)| {
                y[0] = 0;
                y[1] = 1;
                y[2] = 2;
                (Dataset::classification(PointSet::new(2, x).unwrap(), y).unwrap(), q)
            })
    })
}

fn scaled(k: &Kernel, c: f64) -> Kernel {
    Kernel::multi(vec![c], vec![k.clone()]).unwrap()
}

proptest! {
    #[test]
    fn local_mean_stays_in_target_hull((d, q) in regression(15), h in 0.1..5.0f64) {
        let y = d.real_targets().unwrap();
        let (lo, hi) = y.as_slice().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        for k in [Kernel::gaussian(h).unwrap(), Kernel::epanechnikov(h).unwrap()] {
            let p = local_mean_predict(&k, &d, &q, Fallback::NearestNeighbor).unwrap();
            prop_assert!(p[0] >= lo && p[0] <= hi);
        }
    }

    #[test]
    fn local_mean_ignores_kernel_scale((d, q) in regression(12), c in 0.01..100.0f64) {
        let k = Kernel::gaussian(1.5).unwrap();
        let a = local_mean_predict(&k, &d, &q, Fallback::Error).unwrap();
        let b = local_mean_predict(&scaled(&k, c), &d, &q, Fallback::Error).unwrap();
        prop_assert!((a[0] - b[0]).abs() <= 1e-12 * (1.0 + a[0].abs()));
    }

    #[test]
    fn class_decisions_ignore_kernel_scale((d, q) in classification(14), c in 0.01..100.0f64) {
        let k = Kernel::gaussian(2.0).unwrap();
        let ks = scaled(&k, c);
        prop_assert_eq!(local_mode_predict(&k, &d, &q).unwrap().0, local_mode_predict(&ks, &d, &q).unwrap().0);
        let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
        prop_assert_eq!(
            local_centerless_classify(&k, &dist, &d, &q, true).unwrap().0,
            local_centerless_classify(&ks, &dist, &d, &q, true).unwrap().0
        );
        let class = |p: Prediction| match p { Prediction::Class { class, .. } => class, _ => usize::MAX };
        prop_assert_eq!(
            class(knn_predict(3, &d, &q, Some(&k)).unwrap()),
            class(knn_predict(3, &d, &q, Some(&ks)).unwrap())
        );
    }

    #[test]
    fn equivalent_weights_reproduce_local_linear((d, q) in regression(15), h in 0.5..4.0f64, lambda in 0.0..1.0f64) {
        let r = local_linear_predict(&Kernel::gaussian(h).unwrap(), &d, &q, lambda).unwrap();
        let y = d.real_targets().unwrap();
        let recon: f64 = r.weights.iter().zip(y.as_slice()).map(|(w, v)| w * v).sum();
        prop_assert!((recon - r.value[0]).abs() < 1e-10 * (1.0 + r.value[0].abs()));
    }

    #[test]
    fn squared_loss_fit_is_the_local_mean((d, q) in regression(12)) {
        let k = Kernel::gaussian(1.0).unwrap();
        let fit = local_fit(&Loss::Squared, &k, &d, &q).unwrap();
        let m = local_mean_predict(&k, &d, &q, Fallback::Error).unwrap();
        prop_assert!((fit.theta[0] - m[0]).abs() < 1e-12 * (1.0 + m[0].abs()));
    }

    #[test]
    fn factorized_kernel_agrees_with_inference_rules((d, q) in regression(10)) {
        let map = |v: &[f64]| vec![v[0].abs() + 0.1, (v[1] * 0.5).exp(), (v[0] - v[1]).powi(2)];
        let phi: locuskit::kernel::FeatureMap = Arc::new(map);
        let k = Kernel::feature(phi.clone(), phi, Relation::Dot, "test");
        let rules = inference_precompute(&map, &d).unwrap();
        let a = inference_predict(&map, &rules, &q).unwrap();
        let b = local_mean_predict(&k, &d, &q, Fallback::Error).unwrap();
        prop_assert!((a[0] - b[0]).abs() < 1e-10 * (1.0 + b[0].abs()));
    }
}

#[test]
fn affine_data_is_exact() {
    let x = PointSet::from_rows(&[[0.0, 1.0], [1.0, 0.5], [2.0, 2.0], [-1.0, 0.0], [0.5, -1.5]]).unwrap();
    let y: Vec<f64> = x.rows().map(|r| 3.0 - 2.0 * r[0] + 0.25 * r[1]).collect();
    let d = Dataset::regression(x, y).unwrap();
    let r = local_linear_predict(&Kernel::gaussian(0.7).unwrap(), &d, &[0.3, 0.9], 0.0).unwrap();
    assert!((r.value[0] - (3.0 - 0.6 + 0.225)).abs() < 1e-9);
}

#[test]
fn full_knn_is_the_uniform_local_mean_and_mode() {
    let x = PointSet::from_scalars(&[0.0, 1.0, 2.5, 4.0, 7.0]).unwrap();
    let reg = Dataset::regression(x.clone(), vec![1.0, -2.0, 0.5, 3.0, 4.0]).unwrap();
    let uniform = Kernel::uniform();
    for q in [-1.0, 2.0, 9.0] {
        let Prediction::Value(v) = knn_predict(5, &reg, &[q], None).unwrap() else { panic!("regression") };
        let m = local_mean_predict(&uniform, &reg, &[q], Fallback::Error).unwrap();
        assert!((v[0] - m[0]).abs() < 1e-12);
    }
    let cls = Dataset::classification(x, vec![0, 1, 1, 0, 1]).unwrap();
    let Prediction::Class { class, .. } = knn_predict(5, &cls, &[0.0], None).unwrap() else { panic!("classification") };
    assert_eq!(class, local_mode_predict(&uniform, &cls, &[0.0]).unwrap().0);
}
