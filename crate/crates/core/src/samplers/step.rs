//! Single-iteration updates. All of them work in place on `theta` and
//! return [`Error::NonFinite`] if any coordinate leaves the finite range; the
//! contents of `theta` are then unspecified and the chain must stop.

use crate::error::{Error, Result};
use crate::model_api::GradientEstimate;
use crate::rng::NoiseSource;

fn check(theta: &[f64]) -> Result<()> {
    if theta.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

fn check_dims(theta: &[f64], prior_grad: &[f64], grad: &GradientEstimate) -> Result<()> {
    for len in [prior_grad.len(), grad.g_bar.len()] {
        if len != theta.len() {
            return Err(Error::DimensionMismatch {
                expected: theta.len(),
                found: len,
            });
        }
    }
    Ok(())
}

/// `θ ← θ + ε·(∇log p(θ) + N·ḡ)`.
pub fn sgd_step(
    theta: &mut [f64],
    prior_grad: &[f64],
    grad: &GradientEstimate,
    eps: f64,
) -> Result<()> {
    check_dims(theta, prior_grad, grad)?;
    for ((t, p), g) in theta.iter_mut().zip(prior_grad).zip(grad.scaled()) {
        *t += eps * (p + g);
    }
    check(theta)
}

/// `θ ← θ + (ε/2)·(∇log p(θ) + N·ḡ) + √ε·z`, `z ~ 𝒩(0, I)`.
pub fn sgld_step(
    theta: &mut [f64],
    prior_grad: &[f64],
    grad: &GradientEstimate,
    eps: f64,
    noise: &mut impl NoiseSource,
) -> Result<()> {
    check_dims(theta, prior_grad, grad)?;
    let half = 0.5 * eps;
    let scale = libm::sqrt(eps);
    for ((t, p), g) in theta.iter_mut().zip(prior_grad).zip(grad.scaled()) {
        let drift = p + g;
        *t += half * drift + scale * noise.standard_normal();
    }
    check(theta)
}

/// `θ ← θ + (ε/2)·(G⊙(∇log p(θ) + N·ḡ) + Γ) + √(ε·G)⊙z`.
///
/// `g_diag` must already include this iteration's gradient. Passing
/// `gamma = None` drops the Γ correction.
pub fn psgld_step(
    theta: &mut [f64],
    prior_grad: &[f64],
    grad: &GradientEstimate,
    g_diag: &[f64],
    gamma: Option<&[f64]>,
    eps: f64,
    noise: &mut impl NoiseSource,
) -> Result<()> {
    check_dims(theta, prior_grad, grad)?;
    if g_diag.len() != theta.len() {
        return Err(Error::DimensionMismatch {
            expected: theta.len(),
            found: g_diag.len(),
        });
    }
    if let Some(gm) = gamma {
        if gm.len() != g_diag.len() {
            return Err(Error::DimensionMismatch {
                expected: g_diag.len(),
                found: gm.len(),
            });
        }
    }
    let half = 0.5 * eps;
    let terms = theta
        .iter_mut()
        .zip(prior_grad)
        .zip(grad.scaled())
        .zip(g_diag)
        .enumerate();
    for (i, (((t, p), g), gd)) in terms {
        let correction = gamma.map_or(0.0, |gm| gm[i]);
        let drift = gd * (p + g) + correction;
        *t += half * drift + libm::sqrt(eps * gd) * noise.standard_normal();
    }
    check(theta)
}

/// Preconditioned ascent without noise: `θ ← θ + ε·G⊙(∇log p(θ) + N·ḡ)`.
pub fn rmsprop_step(
    theta: &mut [f64],
    prior_grad: &[f64],
    grad: &GradientEstimate,
    g_diag: &[f64],
    eps: f64,
) -> Result<()> {
    check_dims(theta, prior_grad, grad)?;
    for (((t, p), g), gd) in theta
        .iter_mut()
        .zip(prior_grad)
        .zip(grad.scaled())
        .zip(g_diag)
    {
        *t += eps * (gd * (p + g));
    }
    check(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{ChainRng, InjectedNoise};
    use crate::samplers::PreconditionerState;
    use alloc::vec;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn est(g: Vec<f64>, n: usize, big_n: usize) -> GradientEstimate {
        GradientEstimate::new(g.into(), n, big_n).unwrap()
    }

    #[test]
    fn sgd_examples() {
        let mut t = [1.0, -2.0];
        sgd_step(&mut t, &[0.0, 0.0], &est(vec![0.0, 0.0], 1, 1), 0.5).unwrap();
        assert_eq!(t, [1.0, -2.0]);

        let mut t = [0.0];
        sgd_step(&mut t, &[0.0], &est(vec![2.0], 1, 1), 0.1).unwrap();
        assert!((t[0] - 0.2).abs() < 1e-15);

        let mut t = [0.0, 0.0];
        sgd_step(&mut t, &[0.0, 0.0], &est(vec![0.01, 0.01], 10, 100), 1.0).unwrap();
        assert!((t[0] - 1.0).abs() < 1e-12 && (t[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sgld_examples() {
        let mut t = [0.3, 0.4];
        sgld_step(&mut t, &[0.0; 2], &est(vec![0.0; 2], 1, 1), 0.1, &mut InjectedNoise::new(&[0.0])).unwrap();
        assert_eq!(t, [0.3, 0.4]);

        let mut t = [0.0];
        sgld_step(&mut t, &[0.0], &est(vec![2.0], 1, 1), 0.1, &mut InjectedNoise::new(&[1.0])).unwrap();
        assert!((t[0] - 0.416228).abs() < 1e-6);
        assert!((t[0] - (0.1 + libm::sqrt(0.1))).abs() < 1e-15);
    }

    #[test]
    fn sgld_noise_variance_matches_eps() {
        let eps = 0.05;
        let mut rng = ChainRng::seed_from(42);
        let n = 10_000;
        let mut draws = Vec::with_capacity(n);
        for _ in 0..n {
            let mut t = [0.0];
            sgld_step(&mut t, &[0.0], &est(vec![0.0], 1, 1), eps, &mut rng).unwrap();
            draws.push(t[0]);
        }
        let m = draws.iter().sum::<f64>() / n as f64;
        let v = draws.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
        assert!((v / eps - 1.0).abs() < 0.05, "variance ratio {}", v / eps);
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn psgld_chained_example() {
        let mut state = PreconditionerState::with_defaults(1);
        let g = est(vec![2.0], 1, 1);
        let gd = state.update(&g.g_bar);
        assert!((state.second_moment()[0] - 0.04).abs() < 1e-16);
        assert!((gd[0] - 4.99975).abs() < 1e-5);
        let mut t = [0.0];
        psgld_step(&mut t, &[0.0], &g, &gd, None, 0.1, &mut InjectedNoise::new(&[1.0])).unwrap();
        let drift = 0.05 * (gd[0] * 2.0);
        let noise = libm::sqrt(0.1 * gd[0]);
        assert!((drift - 0.49998).abs() < 1e-5);
        // Reference values are quoted to five decimals.
        assert!((noise - 0.70710).abs() < 5e-5);
        assert!((t[0] - (drift + noise)).abs() < 1e-15);
        assert!((t[0] - 1.20708).abs() < 5e-5);
    }

    #[test]
    fn psgld_noise_variance_matches_eps_g() {
        let eps = 0.1;
        let gd = [0.5, 4.0];
        let mut rng = ChainRng::seed_from(9);
        let n = 10_000;
        let (mut s, mut s2) = ([0.0; 2], [0.0; 2]);
        for _ in 0..n {
            let mut t = [0.0, 0.0];
            psgld_step(&mut t, &[0.0; 2], &est(vec![0.0; 2], 1, 1), &gd, None, eps, &mut rng).unwrap();
            for i in 0..2 {
                s[i] += t[i];
                s2[i] += t[i] * t[i];
            }
        }
        for i in 0..2 {
            let m = s[i] / n as f64;
            let v = s2[i] / n as f64 - m * m;
            assert!((v / (eps * gd[i]) - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn rmsprop_examples() {
        let mut t = [1.0];
        rmsprop_step(&mut t, &[0.0], &est(vec![0.0], 1, 1), &[3.0], 0.1).unwrap();
        assert_eq!(t, [1.0]);

        let mut state = PreconditionerState::with_defaults(1);
        let g = est(vec![2.0], 1, 1);
        let gd = state.update(&g.g_bar);
        let mut t = [0.0];
        rmsprop_step(&mut t, &[0.0], &g, &gd, 0.1).unwrap();
        assert!((t[0] - 0.99995).abs() < 1e-5);
    }

    #[test]
    fn divergence_is_reported() {
        let mut t = [1e308];
        let r = sgd_step(&mut t, &[0.0], &est(vec![1e308], 1, 1), 10.0);
        assert_eq!(r, Err(Error::NonFinite));
        let mut t = [0.0];
        let r = sgld_step(&mut t, &[f64::NAN], &est(vec![0.0], 1, 1), 0.1, &mut InjectedNoise::new(&[0.0]));
        assert_eq!(r, Err(Error::NonFinite));
    }

    #[test]
    fn dimension_mismatch() {
        let mut t = [0.0, 0.0];
        assert!(sgd_step(&mut t, &[0.0], &est(vec![0.0, 0.0], 1, 1), 0.1).is_err());
        assert!(rmsprop_step(&mut t, &[0.0; 2], &est(vec![0.0], 1, 1), &[1.0; 2], 0.1).is_err());
    }

    proptest! {
        #[test]
        fn identity_preconditioner_reduces_to_sgld(
            theta in prop::collection::vec(-1e3f64..1e3, 1..6),
            seed in any::<u64>(), eps in 1e-6f64..1.0, n in 1usize..50, extra in 0usize..50,
        ) {
            let d = theta.len();
            let mut rng = ChainRng::seed_from(seed);
            let prior: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
            let g: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
            let z: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
            let grad = est(g, n, n + extra);
            let mut a = theta.clone();
            let mut b = theta.clone();
            sgld_step(&mut a, &prior, &grad, eps, &mut InjectedNoise::new(&z)).unwrap();
            psgld_step(&mut b, &prior, &grad, &vec![1.0; d], None, eps, &mut InjectedNoise::new(&z)).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
            let mut c = theta.clone();
            let mut e = theta.clone();
            sgd_step(&mut c, &prior, &grad, eps).unwrap();
            rmsprop_step(&mut e, &prior, &grad, &vec![1.0; d], eps).unwrap();
            for (x, y) in c.iter().zip(&e) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}
