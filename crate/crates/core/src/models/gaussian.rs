use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model_api::{GradientEstimate, Minibatch, Model, ParamVector};
use crate::rng::{ChainRng, NoiseSource};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Axis-aligned Gaussian 𝒩(μ, diag(Σ)) sampled directly.
///
/// Treated as a model with a single datum (`N = n = 1`), no prior and the
/// exact gradient, so the minibatch gradient is never stochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianTarget {
    mean: Vec<f64>,
    cov_diag: Vec<f64>,
}

impl GaussianTarget {
    pub fn new(mean: Vec<f64>, cov_diag: Vec<f64>) -> Result<Self> {
        if mean.len() != cov_diag.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: cov_diag.len(),
            });
        }
        if mean.is_empty() {
            return Err(Error::invalid("gaussian target", "dimension must be positive"));
        }
        if cov_diag.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::invalid("covariance", "diagonal entries must be positive"));
        }
        Ok(Self { mean, cov_diag })
    }

    /// Zero-mean target with the given variances.
    pub fn centered(cov_diag: Vec<f64>) -> Result<Self> {
        Self::new(alloc::vec![0.0; cov_diag.len()], cov_diag)
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov_diag(&self) -> &[f64] {
        &self.cov_diag
    }

    /// Dense row-major covariance matrix.
    pub fn covariance_matrix(&self) -> Vec<f64> {
        let d = self.mean.len();
        let mut m = alloc::vec![0.0; d * d];
        for i in 0..d {
            m[i * d + i] = self.cov_diag[i];
        }
        m
    }

    pub fn log_density(&self, theta: &[f64]) -> f64 {
        theta
            .iter()
            .zip(&self.mean)
            .zip(&self.cov_diag)
            .map(|((t, m), s)| -0.5 * ((t - m) * (t - m) / s + LN_2PI + libm::log(*s)))
            .sum()
    }
}

/// `∇ log 𝒩(θ; μ, Σ) = −(θ − μ)/Σ_ii`.
pub fn gaussian_log_grad(target: &GaussianTarget, theta: &[f64]) -> Result<ParamVector> {
    target.check_dim(theta)?;
    Ok(theta
        .iter()
        .zip(&target.mean)
        .zip(&target.cov_diag)
        .map(|((t, m), s)| -(t - m) / s)
        .collect::<Vec<_>>()
        .into())
}

impl Model for GaussianTarget {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn data_len(&self) -> usize {
        1
    }

    fn log_prior(&self, _theta: &[f64]) -> f64 {
        0.0
    }

    fn log_prior_grad(&self, theta: &[f64]) -> ParamVector {
        ParamVector::zeros(theta.len())
    }

    fn minibatch_grad(&self, theta: &[f64], batch: &Minibatch) -> Result<GradientEstimate> {
        batch.check_against(1)?;
        GradientEstimate::new(gaussian_log_grad(self, theta)?, 1, 1)
    }

    fn mean_log_likelihood(&self, theta: &[f64], batch: &Minibatch) -> Result<f64> {
        batch.check_against(1)?;
        self.check_dim(theta)?;
        Ok(self.log_density(theta))
    }

    fn supports_diag_hessian(&self) -> bool {
        true
    }

    fn diag_hessian(&self, theta: &[f64], batch: &Minibatch) -> Result<ParamVector> {
        batch.check_against(1)?;
        self.check_dim(theta)?;
        Ok(self
            .cov_diag
            .iter()
            .map(|s| -1.0 / s)
            .collect::<Vec<_>>()
            .into())
    }

    fn init_theta(&self, rng: &mut ChainRng) -> ParamVector {
        self.mean
            .iter()
            .map(|m| m + rng.standard_normal())
            .collect::<Vec<_>>()
            .into()
    }
}
