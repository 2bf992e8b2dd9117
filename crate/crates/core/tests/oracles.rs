//! Statistical checks of the sampling and quadrature references.

use std::sync::Arc;

use psgld_core::diagnostics::{mc_standard_error, posterior_mean, predictive_estimate, test_error};
use psgld_core::models::{GaussianTarget, LogisticRegression};
use psgld_core::oracle::{grid_expectation, mh_chain, tune_proposal, MhConfig};
use psgld_core::synth::synth_blr;
use psgld_core::diagnostics::TestFunctional;
use psgld_core::{Classifier, Dataset, PriorConfig, SampleTrace, TraceMeta};

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

#[test]
fn mh_matches_normal_cdf() {
    let target = GaussianTarget::centered(vec![1.0]).unwrap();
    let run = mh_chain(&target, &MhConfig::new(2.4, 1_000_000, 1_000, 77), None).unwrap();
    let mut xs = run.trace.coordinate(0);
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = std_normal_cdf(*x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.01, "KS statistic {ks}");
}

#[test]
fn grid_and_mh_agree_on_two_feature_blr() {
    let data = Arc::new(synth_blr(80, 2, 12, &[1.5, -0.5]).unwrap());
    let model = LogisticRegression::new(data, PriorConfig::new(10.0).unwrap()).unwrap();
    let tuned = tune_proposal(&model, &MhConfig::new(0.5, 200_000, 5_000, 3), None, 2_000, true).unwrap();
    let run = mh_chain(&model, &tuned.config, Some(tuned.warm_start.clone())).unwrap();
    let bounds = [(-3.0, 6.0), (-5.0, 4.0)];
    for i in 0..2 {
        let grid = grid_expectation(&model, &bounds, 400, &TestFunctional::coordinate(i)).unwrap();
        let c = run.trace.coordinate(i);
        let m = c.iter().sum::<f64>() / c.len() as f64;
        let se = mc_standard_error(&c).unwrap();
        assert!((m - grid).abs() < 3.0 * se, "coord {i}: mh {m} grid {grid} se {se}");
    }
}

#[test]
fn grid_and_mh_agree_on_gaussian() {
    let target = GaussianTarget::new(vec![0.2, -0.1], vec![0.16, 1.0]).unwrap();
    let run = mh_chain(&target, &MhConfig::new(1.0, 200_000, 1_000, 5), None).unwrap();
    let bounds = [(-1.8, 2.2), (-6.1, 5.9)];
    for i in 0..2 {
        let grid = grid_expectation(&target, &bounds, 400, &TestFunctional::coordinate(i)).unwrap();
        let c = run.trace.coordinate(i);
        let m = c.iter().sum::<f64>() / c.len() as f64;
        assert!((m - grid).abs() < 3.0 * mc_standard_error(&c).unwrap());
    }
}

#[test]
fn separable_data_posterior_sign_follows_truth() {
    let truth = [10.0, -10.0, 10.0];
    let data = Arc::new(synth_blr(200, 3, 8, &truth).unwrap());
    let model = LogisticRegression::new(data, PriorConfig::new(100.0).unwrap()).unwrap();
    let tuned = tune_proposal(&model, &MhConfig::new(0.5, 50_000, 5_000, 1), None, 2_000, true).unwrap();
    let run = mh_chain(&model, &tuned.config, Some(tuned.warm_start)).unwrap();
    let m = posterior_mean(&run.trace).unwrap();
    for (a, b) in m.iter().zip(truth) {
        assert_eq!(a.signum(), b.signum());
    }
}

fn trace_of(thetas: Vec<Vec<f64>>) -> SampleTrace {
    let meta = TraceMeta {
        algorithm: "test".into(),
        dim: thetas[0].len(),
        total_iters: thetas.len(),
        burn_in: 0,
        thinning: 1,
        seed: 0,
        schedule: "constant".into(),
    };
    let n = thetas.len() as f64;
    SampleTrace::from_parts(meta, thetas.into_iter().map(|t| (t.into(), 1.0)).collect(), n).unwrap()
}

#[test]
fn predictive_ensemble() {
    let data = Arc::new(Dataset::dense("p", 1, vec![1.0, -1.0], vec![1, -1]).unwrap());
    let model = LogisticRegression::new(data.clone(), PriorConfig::new(1.0).unwrap()).unwrap();

    let single = trace_of(vec![vec![0.7]]);
    let p = predictive_estimate(&single, &model, data.row(0)).unwrap();
    assert_eq!(p, model.predict_proba(&[0.7], data.row(0)).unwrap());

    let both = trace_of(vec![vec![40.0], vec![-40.0]]);
    let p = predictive_estimate(&both, &model, data.row(0)).unwrap();
    assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);

    assert_eq!(test_error(&trace_of(vec![vec![5.0]]), &model, &data).unwrap(), 0.0);
    assert_eq!(test_error(&trace_of(vec![vec![-5.0]]), &model, &data).unwrap(), 100.0);
}
