use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::dataset::{Dataset, Row};
use crate::error::{Error, Result};
use crate::model_api::{
    log_prior_grad, Classifier, GradientEstimate, Minibatch, Model, ParamVector, PriorConfig,
};
use crate::rng::{ChainRng, NoiseSource};

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// `log σ(z)` without overflow for large `|z|`.
pub fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -libm::log1p(libm::exp(-z))
    } else {
        z - libm::log1p(libm::exp(z))
    }
}

/// Probability of label +1: `σ(θᵀx)`.
pub fn blr_predict(theta: &[f64], x: Row<'_>) -> f64 {
    sigmoid(x.dot(theta))
}

/// Bayesian logistic regression with labels in {−1, +1} and a 𝒩(0, σ²I) prior.
#[derive(Debug, Clone)]
pub struct LogisticRegression {
    data: Arc<Dataset>,
    prior: PriorConfig,
    init_std: f64,
}

impl LogisticRegression {
    pub fn new(data: Arc<Dataset>, prior: PriorConfig) -> Result<Self> {
        if let Some(bad) = data.labels().iter().find(|&&y| y != 1 && y != -1) {
            return Err(Error::Dataset(alloc::format!(
                "logistic regression needs labels in {{-1, +1}}, found {bad}"
            )));
        }
        Ok(Self {
            data,
            prior,
            init_std: 0.01,
        })
    }

    /// Standard deviation of the random starting point (default 0.01).
    pub fn with_init_std(mut self, std: f64) -> Self {
        self.init_std = std;
        self
    }

    pub fn dataset(&self) -> &Arc<Dataset> {
        &self.data
    }

    pub fn prior(&self) -> PriorConfig {
        self.prior
    }
}

impl Model for LogisticRegression {
    fn dim(&self) -> usize {
        self.data.cols()
    }

    fn data_len(&self) -> usize {
        self.data.len()
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        self.prior.log_density(theta)
    }

    fn log_prior_grad(&self, theta: &[f64]) -> ParamVector {
        log_prior_grad(theta, &self.prior)
    }

    fn minibatch_grad(&self, theta: &[f64], batch: &Minibatch) -> Result<GradientEstimate> {
        self.check_dim(theta)?;
        batch.check_against(self.data.len())?;
        let mut g = ParamVector::zeros(self.dim());
        let inv_n = 1.0 / batch.len() as f64;
        for &i in batch.indices() {
            let x = self.data.row(i);
            let y = f64::from(self.data.label(i));
            // ∇ log σ(y θᵀx) = σ(−y θᵀx) y x
            let w = sigmoid(-y * x.dot(theta)) * y;
            x.axpy(w * inv_n, &mut g);
        }
        GradientEstimate::new(g, batch.len(), self.data.len())
    }

    fn mean_log_likelihood(&self, theta: &[f64], batch: &Minibatch) -> Result<f64> {
        self.check_dim(theta)?;
        batch.check_against(self.data.len())?;
        let s: f64 = batch
            .indices()
            .iter()
            .map(|&i| log_sigmoid(f64::from(self.data.label(i)) * self.data.row(i).dot(theta)))
            .sum();
        Ok(s / batch.len() as f64)
    }

    fn log_likelihood(&self, theta: &[f64]) -> Result<f64> {
        self.check_dim(theta)?;
        Ok((0..self.data.len())
            .map(|i| log_sigmoid(f64::from(self.data.label(i)) * self.data.row(i).dot(theta)))
            .sum())
    }

    fn supports_diag_hessian(&self) -> bool {
        true
    }

    fn diag_hessian(&self, theta: &[f64], batch: &Minibatch) -> Result<ParamVector> {
        self.check_dim(theta)?;
        batch.check_against(self.data.len())?;
        let mut h = ParamVector::zeros(self.dim());
        let inv_n = 1.0 / batch.len() as f64;
        for &i in batch.indices() {
            let x = self.data.row(i);
            let p = sigmoid(x.dot(theta));
            let w = -p * (1.0 - p) * inv_n;
            for (j, v) in x.nonzeros() {
                h[j] += w * v * v;
            }
        }
        Ok(h)
    }

    fn init_theta(&self, rng: &mut ChainRng) -> ParamVector {
        (0..self.dim())
            .map(|_| self.init_std * rng.standard_normal())
            .collect::<Vec<_>>()
            .into()
    }
}

impl Classifier for LogisticRegression {
    fn num_classes(&self) -> usize {
        2
    }

    /// `[P(y = −1), P(y = +1)]`.
    fn predict_proba(&self, theta: &[f64], x: Row<'_>) -> Result<Vec<f64>> {
        self.check_dim(theta)?;
        let z = x.dot(theta);
        Ok(alloc::vec![sigmoid(-z), sigmoid(z)])
    }

    fn class_of(&self, label: i32) -> Option<usize> {
        match label {
            -1 => Some(0),
            1 => Some(1),
            _ => None,
        }
    }
}
