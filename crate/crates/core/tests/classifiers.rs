mod common;

use common::*;
use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;
use vfuse_core::model::elastic_net::smooth_objective;
use vfuse_core::model::{
    fit, fit_neural_net, fit_random_forest, ClassifierConfig, ElasticNetParams, ForestParams, Mlp, ModelSpec,
    NetParams, Predictor, SplitRule,
};

#[test]
fn elastic_net_gradient_matches_finite_differences() {
    for seed in 0..20 {
        let mut r = rng(seed);
        let (n, d) = (12, 4);
        let x = gaussian_matrix(n, d, &mut r);
        let y: Vec<bool> = (0..n).map(|i| i % 3 == 0 || r.random_bool(0.3)).collect();
        let theta: Vec<f64> = (0..=d).map(|_| r.random_range(-1.0..1.0)).collect();
        let (lambda, alpha) = (r.random_range(0.1..8.0), r.random_range(0.0..1.0));
        let (_, analytic) = smooth_objective(x.view(), &y, &theta, lambda, alpha);
        let numeric = numeric_gradient(&theta, 1e-5, |t| smooth_objective(x.view(), &y, t, lambda, alpha).0);
        let err = max_relative_error(&analytic, &numeric, 1e-8);
        assert!(err < 1e-5, "seed {seed}: relative error {err}");
    }
}

#[test]
fn network_gradient_matches_finite_differences() {
    for seed in 0..20 {
        let mut r = rng(100 + seed);
        let (n, d) = (10, 3);
        let x = gaussian_matrix(n, d, &mut r);
        let y: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
        let mut net = Mlp::init(d, 2, 2, &mut r);
        // zero biases put dead-input rows exactly on the ReLU kink
        for layer in &mut net.layers {
            layer.b.mapv_inplace(|_| r.random_range(-0.5..0.5));
        }
        let theta = net.flat_params();
        let analytic = net.gradient(x.view(), &y, 1e-5, 1e-5);
        let mut probe = net.clone();
        let numeric = numeric_gradient(&theta, 1e-6, |t| {
            probe.set_flat_params(t);
            probe.objective(x.view(), &y, 1e-5, 1e-5)
        });
        let err = max_relative_error(&analytic, &numeric, 1e-7);
        assert!(err < 1e-4, "seed {seed}: relative error {err}\n{analytic:?}\n{numeric:?}");
    }
}

#[test]
fn forest_learns_xor_out_of_bag() {
    let (x, y) = xor(400, 7);
    let m = fit_random_forest(x.view(), &y, &ForestParams::new(0.6, SplitRule::Gini, 5, 8), 1).unwrap();
    let oob = m.meta.oob_accuracy.unwrap();
    assert!(oob > 0.95, "oob accuracy {oob}");
}

#[test]
fn network_fits_xor() {
    let (x, y) = xor(2000, 3);
    let params = NetParams::new(2.0, 2, 0.0, 128, 1e-3);
    let m = fit_neural_net(x.view(), &y, &params, 11).unwrap();
    let p = m.predict_proba(x.view()).unwrap();
    let acc = p.iter().zip(&y).filter(|(p, t)| (**p >= 0.5) == **t).count() as f64 / y.len() as f64;
    assert!(acc > 0.95, "training accuracy {acc}, meta {:?}", m.meta);
}

#[test]
fn network_keeps_best_validation_weights() {
    let (x, y) = xor(600, 5);
    let params = NetParams::new(1.0, 2, 0.2, 128, 1e-3);
    let m = fit_neural_net(x.view(), &y, &params, 2).unwrap();
    assert!(m.meta.best_validation_loss.is_some());
}

fn any_spec() -> impl Strategy<Value = ModelSpec> {
    prop_oneof![
        Just(ModelSpec::Logistic),
        Just(ModelSpec::ElasticNet(ElasticNetParams::new(0.3, 1e-3, 0.5))),
        Just(ModelSpec::RandomForest(ForestParams { n_trees: 15, ..ForestParams::new(0.6, SplitRule::Entropy, 5, 8) })),
        Just(ModelSpec::NeuralNet(NetParams { max_epochs: 5, ..NetParams::new(1.0, 2, 0.2, 128, 1e-3) })),
        Just(ModelSpec::Majority),
        Just(ModelSpec::Random),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn probabilities_lie_in_unit_interval(spec in any_spec(), seed in 0u64..1000, scale in 0.1f64..50.0) {
        let mut r = rng(seed);
        let x = gaussian_matrix(60, 3, &mut r) * scale;
        let mut y: Vec<bool> = (0..60).map(|_| r.random_bool(0.4)).collect();
        y[0] = true;
        y[1] = false;
        let m = fit(x.view(), &y, &ClassifierConfig::new(spec, seed)).unwrap();
        let probe = gaussian_matrix(40, 3, &mut r) * (scale * 3.0);
        for p in m.predict_proba(probe.view()).unwrap() {
            prop_assert!(p.is_finite() && (0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn fits_are_deterministic(spec in any_spec(), seed in 0u64..1000) {
        let mut r = rng(seed);
        let x = gaussian_matrix(50, 2, &mut r);
        let y: Vec<bool> = (0..50).map(|i| i % 3 == 0).collect();
        let cfg = ClassifierConfig::new(spec, seed);
        let a = fit(x.view(), &y, &cfg).unwrap();
        let b = fit(x.view(), &y, &cfg).unwrap();
        prop_assert_eq!(a.predict_proba(x.view()).unwrap(), b.predict_proba(x.view()).unwrap());
    }
}

#[test]
fn width_mismatch_is_an_error() {
    let x = Array2::from_shape_fn((10, 3), |(i, j)| (i * j) as f64);
    let y: Vec<bool> = (0..10).map(|i| i < 4).collect();
    let m = fit(x.view(), &y, &ClassifierConfig::new(ModelSpec::Logistic, 0)).unwrap();
    let wrong = Array2::zeros((2, 4));
    assert!(matches!(m.predict_proba(wrong.view()), Err(vfuse_core::Error::WidthMismatch { expected: 3, actual: 4 })));
}
