//! Trace diagnostics.
//!
//! Autocovariances use the per-lag normalisation
//! `A(t) = (1/(T−t))·Σ_i (v_i − v̄)(v_{i+t} − v̄)`. The integrated
//! autocorrelation time truncates with Geyer's initial positive sequence:
//! pairs `γ(2k) + γ(2k+1)` are summed until the first non-positive pair.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::{Dataset, Row};
use crate::error::{Error, Result};
use crate::model_api::{Classifier, ParamVector};
use crate::trace::SampleTrace;

type Eval = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Scalar function of the parameters whose posterior expectation is estimated.
pub struct TestFunctional {
    name: String,
    eval: Eval,
}

impl core::fmt::Debug for TestFunctional {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("TestFunctional").field("name", &self.name).finish()
    }
}

impl TestFunctional {
    pub fn new(name: impl Into<String>, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            eval: Box::new(eval),
        }
    }

    /// `θ ↦ θ_i`.
    pub fn coordinate(i: usize) -> Self {
        Self::new(alloc::format!("theta[{i}]"), move |t| t[i])
    }

    /// `θ ↦ θ_i²`.
    pub fn square(i: usize) -> Self {
        Self::new(alloc::format!("theta[{i}]^2"), move |t| t[i] * t[i])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, theta: &[f64]) -> f64 {
        (self.eval)(theta)
    }

    /// `φ` over the recorded samples. Errors if any value is non-finite.
    pub fn series(&self, trace: &SampleTrace) -> Result<Vec<f64>> {
        let v: Vec<f64> = trace.thetas().map(|t| self.eval(t)).collect();
        if v.iter().all(|x| x.is_finite()) {
            Ok(v)
        } else {
            Err(Error::NonFinite)
        }
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |a, v| a + v) / values.len() as f64
}

fn lag_cov(values: &[f64], m: f64, t: usize) -> f64 {
    let n = values.len() - t;
    let s: f64 = values[..n]
        .iter()
        .zip(&values[t..])
        .map(|(a, b)| (a - m) * (b - m))
        .sum();
    s / n as f64
}

/// `A(0..=max_lag)`.
pub fn autocovariance(values: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            found: values.len(),
        });
    }
    if max_lag >= values.len() {
        return Err(Error::invalid("max_lag", "must be smaller than the series length"));
    }
    let m = mean(values);
    Ok((0..=max_lag).map(|t| lag_cov(values, m, t)).collect())
}

/// `γ(t) = A(t)/A(0)`.
pub fn acf(autocov: &[f64]) -> Result<Vec<f64>> {
    match autocov.first() {
        Some(&a0) if a0 > 0.0 => Ok(autocov.iter().map(|a| a / a0).collect()),
        Some(_) => Err(Error::DegenerateTrace),
        None => Err(Error::InsufficientSamples { needed: 1, found: 0 }),
    }
}

/// Integrated autocorrelation time from precomputed autocovariances.
///
/// Only complete pairs within `autocov` contribute. The result is at least 1/2.
pub fn act(autocov: &[f64]) -> Result<f64> {
    let g = acf(autocov)?;
    let mut sum = 0.0;
    let mut k = 0;
    while 2 * k + 1 < g.len() {
        let pair = g[2 * k] + g[2 * k + 1];
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        k += 1;
    }
    Ok((sum - 0.5).max(0.5))
}

/// Autocovariances up to the truncation lag, followed by the ACT.
///
/// Lags are computed on demand, so the cost is `O(T·t*)` for truncation lag
/// `t*` rather than `O(T²)`.
pub fn integrated_act(values: &[f64]) -> Result<(Vec<f64>, f64)> {
    if values.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            found: values.len(),
        });
    }
    let m = mean(values);
    let a0 = lag_cov(values, m, 0);
    if a0.is_nan() || a0 <= 0.0 {
        return Err(Error::DegenerateTrace);
    }
    let mut autocov = vec![a0];
    let mut sum = 0.0;
    let mut k = 0;
    while 2 * k + 1 < values.len() {
        if autocov.len() < 2 * k + 2 {
            if 2 * k > 0 {
                autocov.push(lag_cov(values, m, 2 * k));
            }
            autocov.push(lag_cov(values, m, 2 * k + 1));
        }
        let pair = (autocov[2 * k] + autocov[2 * k + 1]) / a0;
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        k += 1;
    }
    Ok((autocov, (sum - 0.5).max(0.5)))
}

/// `M = T/(2τ)`.
pub fn ess(t: usize, tau: f64) -> f64 {
    t as f64 / (2.0 * tau)
}

/// ESS of a scalar series.
pub fn series_ess(values: &[f64]) -> Result<f64> {
    let (_, tau) = integrated_act(values)?;
    Ok(ess(values.len(), tau))
}

/// Monte Carlo standard error of the series mean, `sqrt(A(0)/M)`.
pub fn mc_standard_error(values: &[f64]) -> Result<f64> {
    let (autocov, tau) = integrated_act(values)?;
    Ok(libm::sqrt(autocov[0] / ess(values.len(), tau)))
}

/// Per-coordinate ACT of a trace.
pub fn coordinate_acts(trace: &SampleTrace) -> Result<Vec<f64>> {
    (0..trace.dim())
        .map(|i| integrated_act(&trace.coordinate(i)).map(|(_, tau)| tau))
        .collect()
}

/// Smallest per-coordinate ESS of a trace.
pub fn min_coordinate_ess(trace: &SampleTrace) -> Result<f64> {
    let acts = coordinate_acts(trace)?;
    Ok(acts
        .into_iter()
        .map(|tau| ess(trace.len(), tau))
        .fold(f64::INFINITY, f64::min))
}

/// Weighted: `Σ ε_t φ(θ_t) / Σ ε_t` over recorded samples. Plain: the mean.
pub fn posterior_average(trace: &SampleTrace, phi: &TestFunctional, weighted: bool) -> Result<f64> {
    if trace.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, found: 0 });
    }
    let values = phi.series(trace)?;
    if weighted {
        // Weights relative to the first step size, so equal steps reproduce
        // the plain mean bit for bit.
        let e0 = trace.samples()[0].1;
        let (num, den) = values
            .iter()
            .zip(trace.eps())
            .fold((0.0, 0.0), |(n, d), (v, e)| {
                let w = e / e0;
                (n + w * v, d + w)
            });
        Ok(num / den)
    } else {
        Ok(mean(&values))
    }
}

/// Plain mean of the recorded parameter vectors.
pub fn posterior_mean(trace: &SampleTrace) -> Result<ParamVector> {
    if trace.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, found: 0 });
    }
    let mut m = vec![0.0; trace.dim()];
    for t in trace.thetas() {
        for (a, b) in m.iter_mut().zip(t) {
            *a += b;
        }
    }
    let n = trace.len() as f64;
    m.iter_mut().for_each(|a| *a /= n);
    Ok(m.into())
}

/// Row-major `D×D` sample covariance with `1/n` normalisation.
pub fn sample_covariance(trace: &SampleTrace) -> Result<Vec<f64>> {
    if trace.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            found: trace.len(),
        });
    }
    let d = trace.dim();
    let m = posterior_mean(trace)?;
    let mut c = vec![0.0; d * d];
    let mut centred = vec![0.0; d];
    for t in trace.thetas() {
        for ((c, a), b) in centred.iter_mut().zip(t).zip(m.iter()) {
            *c = a - b;
        }
        for i in 0..d {
            for j in 0..d {
                c[i * d + j] += centred[i] * centred[j];
            }
        }
    }
    let n = trace.len() as f64;
    c.iter_mut().for_each(|v| *v /= n);
    Ok(c)
}

/// Frobenius norm of `sample covariance − true_cov` (row-major `D×D`).
pub fn covariance_error(trace: &SampleTrace, true_cov: &[f64]) -> Result<f64> {
    let d = trace.dim();
    if true_cov.len() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            found: true_cov.len(),
        });
    }
    let c = sample_covariance(trace)?;
    Ok(libm::sqrt(
        c.iter().zip(true_cov).map(|(a, b)| (a - b) * (a - b)).sum(),
    ))
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in p.iter().enumerate().skip(1) {
        if *v > p[best] {
            best = i;
        }
    }
    best
}

/// Unweighted mean of the per-sample predictive distributions at `x`.
pub fn predictive_estimate<C: Classifier + ?Sized>(
    trace: &SampleTrace,
    model: &C,
    x: Row<'_>,
) -> Result<Vec<f64>> {
    if trace.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, found: 0 });
    }
    let mut acc = vec![0.0; model.num_classes()];
    for theta in trace.thetas() {
        model.check_dim(theta)?;
        for (a, p) in acc.iter_mut().zip(model.predict_proba(theta, x)?) {
            *a += p;
        }
    }
    let n = trace.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

/// Running posterior-predictive ensemble over a fixed test set.
///
/// Samples are folded in one at a time, so a learning curve costs one
/// prediction pass per sample.
#[derive(Debug, Clone)]
pub struct Ensemble {
    sums: Vec<f64>,
    classes: usize,
    members: usize,
    targets: Vec<Option<usize>>,
}

impl Ensemble {
    pub fn new<C: Classifier + ?Sized>(model: &C, test: &Dataset) -> Result<Self> {
        if test.is_empty() {
            return Err(Error::Dataset("empty test set".into()));
        }
        let classes = model.num_classes();
        Ok(Self {
            sums: vec![0.0; classes * test.len()],
            classes,
            members: 0,
            targets: test.labels().iter().map(|&l| model.class_of(l)).collect(),
        })
    }

    pub fn add<C: Classifier + ?Sized>(&mut self, model: &C, test: &Dataset, theta: &[f64]) -> Result<()> {
        model.check_dim(theta)?;
        for i in 0..test.len() {
            let p = model.predict_proba(theta, test.row(i))?;
            for (s, v) in self.sums[i * self.classes..(i + 1) * self.classes].iter_mut().zip(p) {
                *s += v;
            }
        }
        self.members += 1;
        Ok(())
    }

    pub fn members(&self) -> usize {
        self.members
    }

    /// Percentage of test points whose ensemble argmax misses the label.
    pub fn error_percent(&self) -> Result<f64> {
        if self.members == 0 {
            return Err(Error::InsufficientSamples { needed: 1, found: 0 });
        }
        let wrong = self
            .targets
            .iter()
            .enumerate()
            .filter(|(i, target)| {
                let pred = argmax(&self.sums[i * self.classes..(i + 1) * self.classes]);
                **target != Some(pred)
            })
            .count();
        Ok(100.0 * wrong as f64 / self.targets.len() as f64)
    }
}

/// Ensemble misclassification rate in percent.
pub fn test_error<C: Classifier + ?Sized>(trace: &SampleTrace, model: &C, test: &Dataset) -> Result<f64> {
    if trace.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, found: 0 });
    }
    let mut e = Ensemble::new(model, test)?;
    for theta in trace.thetas() {
        e.add(model, test, theta)?;
    }
    e.error_percent()
}

/// Keeps recorded samples `0, k, 2k, …`. `S_T` and provenance carry over and
/// the thinning interval is multiplied by `k`.
pub fn thin(trace: &SampleTrace, k: usize) -> Result<SampleTrace> {
    if k == 0 {
        return Err(Error::invalid("k", "must be at least 1"));
    }
    let meta = trace.meta();
    let thinning = meta.thinning * k;
    let samples = trace.samples().iter().step_by(k).cloned().collect();
    let mut out = SampleTrace::from_parts(meta, samples, trace.sum_eps())?;
    out.set_thinning(thinning);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Risk {
    pub bias: f64,
    /// Sample variance with `n − 1` normalisation.
    pub variance: f64,
    /// `bias² + variance`.
    pub risk: f64,
}

/// Bias, variance and risk of repeated-run estimates against a reference.
pub fn risk_decomposition(estimates: &[f64], truth: f64) -> Result<Risk> {
    if estimates.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            found: estimates.len(),
        });
    }
    let m = mean(estimates);
    let n = estimates.len() as f64;
    let variance = estimates.iter().map(|e| (e - m) * (e - m)).sum::<f64>() / (n - 1.0);
    let bias = m - truth;
    Ok(Risk {
        bias,
        variance,
        risk: bias * bias + variance,
    })
}

/// Mean squared deviation of the estimates from `truth`.
pub fn mean_squared_error(estimates: &[f64], truth: f64) -> f64 {
    estimates.iter().map(|e| (e - truth) * (e - truth)).sum::<f64>() / estimates.len() as f64
}

/// Summary of one scalar functional over a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub functional: String,
    /// `A(0..)` up to the truncation lag.
    pub autocov: Vec<f64>,
    pub acf: Vec<f64>,
    pub tau: f64,
    pub ess: f64,
    pub phi_hat: f64,
    pub phi_hat_weighted: f64,
    /// `bias² + variance` of this single estimate, `(φ̂ − truth)² + A(0)/M`.
    pub risk: Option<f64>,
}

impl DiagnosticsReport {
    pub fn compute(trace: &SampleTrace, phi: &TestFunctional, truth: Option<f64>) -> Result<Self> {
        let values = phi.series(trace)?;
        let (autocov, tau) = integrated_act(&values)?;
        let acf = acf(&autocov)?;
        let m = ess(values.len(), tau);
        let phi_hat = mean(&values);
        let phi_hat_weighted = posterior_average(trace, phi, true)?;
        let risk = truth.map(|t| (phi_hat - t) * (phi_hat - t) + autocov[0] / m);
        Ok(Self {
            functional: String::from(phi.name()),
            autocov,
            acf,
            tau,
            ess: m,
            phi_hat,
            phi_hat_weighted,
            risk,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{ChainRng, NoiseSource};
    use crate::trace::TraceMeta;
    use proptest::prelude::*;

    fn trace_of(samples: Vec<(Vec<f64>, f64)>) -> SampleTrace {
        let dim = samples.first().map_or(1, |s| s.0.len());
        let sum = samples.iter().map(|s| s.1).sum();
        SampleTrace::from_parts(
            TraceMeta {
                algorithm: "test".into(),
                dim,
                total_iters: samples.len(),
                burn_in: 0,
                thinning: 1,
                seed: 0,
                schedule: "constant".into(),
            },
            samples.into_iter().map(|(t, e)| (t.into(), e)).collect(),
            sum,
        )
        .unwrap()
    }

    fn iid(n: usize, seed: u64) -> Vec<f64> {
        let mut r = ChainRng::seed_from(seed);
        (0..n).map(|_| r.standard_normal()).collect()
    }

    fn ar1(n: usize, rho: f64, seed: u64) -> Vec<f64> {
        let mut r = ChainRng::seed_from(seed);
        let s = libm::sqrt(1.0 - rho * rho);
        let mut x = r.standard_normal();
        (0..n)
            .map(|_| {
                x = rho * x + s * r.standard_normal();
                x
            })
            .collect()
    }

    #[test]
    fn constant_sequence_is_degenerate() {
        let a = autocovariance(&[2.0; 10], 3).unwrap();
        assert!(a.iter().all(|v| *v == 0.0));
        assert_eq!(act(&a), Err(Error::DegenerateTrace));
        assert_eq!(integrated_act(&[2.0; 10]).map(|r| r.1), Err(Error::DegenerateTrace));
    }

    #[test]
    fn alternating_sequence() {
        let v = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let a = autocovariance(&v, 3).unwrap();
        assert_eq!(a[1] / a[0], -1.0);
        assert_eq!(a[2] / a[0], 1.0);
    }

    #[test]
    fn iid_autocovariance() {
        let v = iid(100_000, 5);
        let a = autocovariance(&v, 1).unwrap();
        assert!((a[0] - 1.0).abs() < 0.02);
        assert!((a[1] / a[0]).abs() < 0.02);
        let m = series_ess(&v).unwrap();
        assert!((0.8..=1.2).contains(&(m / 1e5)), "{m}");
    }

    #[test]
    fn geometric_acf_gives_three_halves() {
        let a: Vec<f64> = (0..200).map(|t| libm::pow(0.5, t as f64)).collect();
        assert!((act(&a).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn act_of_ar1() {
        let v = ar1(100_000, 0.9, 11);
        let (_, tau) = integrated_act(&v).unwrap();
        assert!((tau / 9.5 - 1.0).abs() < 0.05, "tau {tau}");
    }

    #[test]
    fn lazy_and_eager_act_agree() {
        let v = ar1(5_000, 0.7, 2);
        let (lazy_a, lazy) = integrated_act(&v).unwrap();
        let eager = act(&autocovariance(&v, 4_999).unwrap()).unwrap();
        assert!((lazy - eager).abs() < 1e-12);
        assert_eq!(lazy_a, autocovariance(&v, lazy_a.len() - 1).unwrap());
    }

    #[test]
    fn ess_examples() {
        assert_eq!(ess(300, 1.5), 100.0);
        assert_eq!(ess(10, 0.5), 10.0);
        assert!((ess(100_000, 9.5) - 5263.157894).abs() < 1e-3);
    }

    #[test]
    fn posterior_average_examples() {
        let t = trace_of(vec![(vec![0.0], 1.0), (vec![1.0], 3.0)]);
        let phi = TestFunctional::coordinate(0);
        assert_eq!(posterior_average(&t, &phi, true).unwrap(), 0.75);
        assert_eq!(posterior_average(&t, &phi, false).unwrap(), 0.5);
        let c = TestFunctional::new("c", |_| 2.5);
        assert_eq!(posterior_average(&t, &c, true).unwrap(), 2.5);
        let eq = trace_of(vec![(vec![0.3], 0.1), (vec![1.7], 0.1), (vec![-0.4], 0.1)]);
        assert_eq!(
            posterior_average(&eq, &phi, true).unwrap(),
            posterior_average(&eq, &phi, false).unwrap()
        );
    }

    #[test]
    fn covariance_error_examples() {
        let t = trace_of(vec![
            (vec![0.4, 1.0], 1.0),
            (vec![-0.4, -1.0], 1.0),
            (vec![0.4, -1.0], 1.0),
            (vec![-0.4, 1.0], 1.0),
        ]);
        let e = covariance_error(&t, &[0.16, 0.0, 0.0, 1.0]).unwrap();
        assert!(e < 1e-15, "{e}");
        let own = sample_covariance(&t).unwrap();
        assert_eq!(covariance_error(&t, &own).unwrap(), 0.0);
        let one = trace_of(vec![(vec![0.0, 0.0], 1.0)]);
        assert!(covariance_error(&one, &own).is_err());
    }

    #[test]
    fn covariance_error_of_exact_draws() {
        let mut r = ChainRng::seed_from(8);
        let samples = (0..100_000)
            .map(|_| (vec![0.4 * r.standard_normal(), r.standard_normal()], 1.0))
            .collect();
        let e = covariance_error(&trace_of(samples), &[0.16, 0.0, 0.0, 1.0]).unwrap();
        assert!(e < 0.02, "{e}");
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.1, 0.3, 0.3, 0.2]), 1);
    }

    #[test]
    fn thin_examples() {
        let t = trace_of((0..7).map(|i| (vec![i as f64], 1.0)).collect());
        let k3 = thin(&t, 3).unwrap();
        assert_eq!(k3.coordinate(0), vec![0.0, 3.0, 6.0]);
        assert_eq!(k3.thinning(), 3);
        assert_eq!(k3.sum_eps(), t.sum_eps());
        assert_eq!(thin(&t, 1).unwrap(), t);
        assert!(thin(&t, 0).is_err());
    }

    #[test]
    fn risk_examples() {
        assert_eq!(
            risk_decomposition(&[2.0, 2.0], 2.0).unwrap(),
            Risk { bias: 0.0, variance: 0.0, risk: 0.0 }
        );
        let r = risk_decomposition(&[1.0, 3.0], 2.0).unwrap();
        assert_eq!((r.bias, r.variance, r.risk), (0.0, 2.0, 2.0));
        assert!(risk_decomposition(&[1.0], 2.0).is_err());
    }

    #[test]
    fn variance_matches_autocovariance_over_ess() {
        let chains = 400;
        let len = 2_000;
        let mut means = Vec::with_capacity(chains);
        let mut predicted = 0.0;
        for s in 0..chains {
            let v = ar1(len, 0.9, 1000 + s as u64);
            means.push(mean(&v));
            let se = mc_standard_error(&v).unwrap();
            predicted += se * se;
        }
        predicted /= chains as f64;
        let r = risk_decomposition(&means, 0.0).unwrap();
        assert!((r.variance / predicted - 1.0).abs() < 0.2, "{} vs {}", r.variance, predicted);
    }

    #[test]
    fn report_fields() {
        let v = ar1(10_000, 0.5, 3);
        let t = trace_of(v.iter().map(|x| (vec![*x], 0.1)).collect());
        let r = DiagnosticsReport::compute(&t, &TestFunctional::coordinate(0), Some(0.0)).unwrap();
        assert_eq!(r.acf[0], 1.0);
        assert!(r.autocov[0] >= 0.0);
        assert!(r.ess > 0.0 && r.ess <= 10_000.0);
        assert!(r.risk.unwrap() > 0.0);
    }

    proptest! {
        #[test]
        fn risk_identity_with_population_variance(
            est in prop::collection::vec(-100f64..100.0, 2..40), truth in -100f64..100.0
        ) {
            let r = risk_decomposition(&est, truth).unwrap();
            let n = est.len() as f64;
            let pop = r.bias * r.bias + r.variance * (n - 1.0) / n;
            let mse = mean_squared_error(&est, truth);
            prop_assert!((pop - mse).abs() <= 1e-9 * (1.0 + mse));
        }

        #[test]
        fn ess_never_exceeds_length(v in prop::collection::vec(-10f64..10.0, 3..200)) {
            if let Ok((a, tau)) = integrated_act(&v) {
                prop_assert!(a[0] >= 0.0);
                prop_assert!(tau >= 0.5);
                prop_assert!(ess(v.len(), tau) <= v.len() as f64);
            }
        }
    }
}
