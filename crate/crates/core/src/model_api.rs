//! Contract every sampled posterior implements.
//!
//! Gradients are of log-densities (ascent direction). The likelihood gradient
//! is reported as the mean over a minibatch; the samplers scale it by the
//! dataset size `N`.

use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};

use crate::dataset::Row;
use crate::error::{Error, Result};
use crate::rng::ChainRng;

/// Flat parameter vector θ.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn zeros(dim: usize) -> Self {
        Self(alloc::vec![0.0; dim])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Euclidean norm, rescaled so it stays finite for any finite vector.
    pub fn norm(&self) -> f64 {
        let scale = self.0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 || !scale.is_finite() {
            return scale;
        }
        scale * libm::sqrt(self.0.iter().map(|v| (v / scale) * (v / scale)).sum())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl From<&[f64]> for ParamVector {
    fn from(v: &[f64]) -> Self {
        Self(v.to_vec())
    }
}

impl Deref for ParamVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ParamVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Isotropic Gaussian prior 𝒩(0, σ²I).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorConfig {
    sigma_sq: f64,
}

impl PriorConfig {
    pub fn new(sigma_sq: f64) -> Result<Self> {
        if !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
            return Err(Error::invalid("prior variance", "must be positive and finite"));
        }
        Ok(Self { sigma_sq })
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    /// Unnormalized log density, `−|θ|²/(2σ²)`.
    pub fn log_density(&self, theta: &[f64]) -> f64 {
        -theta.iter().map(|t| t * t).sum::<f64>() / (2.0 * self.sigma_sq)
    }
}

/// `∇ log p(θ) = −θ/σ²`.
pub fn log_prior_grad(theta: &[f64], prior: &PriorConfig) -> ParamVector {
    theta.iter().map(|t| -t / prior.sigma_sq).collect::<Vec<_>>().into()
}

/// Row indices of one minibatch, distinct and within `[0, N)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Minibatch {
    indices: Vec<usize>,
}

impl Minibatch {
    pub fn new(indices: Vec<usize>, data_len: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= data_len) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: data_len,
            });
        }
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateIndex(w[0]));
        }
        Ok(Self { indices })
    }

    /// Every row of a dataset of `data_len` rows.
    pub fn full(data_len: usize) -> Self {
        Self {
            indices: (0..data_len).collect(),
        }
    }

    /// Caller guarantees distinct in-range indices (e.g. a slice of a permutation).
    pub(crate) fn from_permutation(indices: Vec<usize>) -> Self {
        Self { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub(crate) fn check_against(&self, data_len: usize) -> Result<()> {
        match self.indices.iter().find(|&&i| i >= data_len) {
            Some(&index) => Err(Error::IndexOutOfRange {
                index,
                len: data_len,
            }),
            None => Ok(()),
        }
    }
}

/// Mean minibatch log-likelihood gradient ḡ with its batch and dataset sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub g_bar: ParamVector,
    pub batch_size: usize,
    pub data_size: usize,
}

impl GradientEstimate {
    pub fn new(g_bar: ParamVector, batch_size: usize, data_size: usize) -> Result<Self> {
        if batch_size == 0 || batch_size > data_size {
            return Err(Error::invalid("batch size", "need 0 < n <= N"));
        }
        Ok(Self {
            g_bar,
            batch_size,
            data_size,
        })
    }

    /// `N·ḡ`, the stochastic estimate of the full-data likelihood gradient.
    pub fn scaled(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.data_size as f64;
        self.g_bar.iter().map(move |g| n * g)
    }
}

/// A posterior target: prior times a likelihood over `data_len` data items.
pub trait Model: Sync {
    fn dim(&self) -> usize;

    /// `N`, the number of data items the likelihood ranges over.
    fn data_len(&self) -> usize;

    fn log_prior(&self, theta: &[f64]) -> f64;

    fn log_prior_grad(&self, theta: &[f64]) -> ParamVector;

    /// Mean of per-datum log-likelihood gradients over `batch`.
    fn minibatch_grad(&self, theta: &[f64], batch: &Minibatch) -> Result<GradientEstimate>;

    /// Mean of per-datum log-likelihoods over `batch`.
    fn mean_log_likelihood(&self, theta: &[f64], batch: &Minibatch) -> Result<f64>;

    /// Sum of log-likelihoods over the whole dataset.
    fn log_likelihood(&self, theta: &[f64]) -> Result<f64> {
        let n = self.data_len();
        Ok(n as f64 * self.mean_log_likelihood(theta, &Minibatch::full(n))?)
    }

    /// Unnormalized full-data log posterior.
    fn log_posterior(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.log_prior(theta) + self.log_likelihood(theta)?)
    }

    fn supports_diag_hessian(&self) -> bool {
        false
    }

    /// Diagonal of the Hessian of the mean minibatch log-likelihood, `∂ḡ_i/∂θ_i`.
    fn diag_hessian(&self, _theta: &[f64], _batch: &Minibatch) -> Result<ParamVector> {
        Err(Error::Unsupported("diagonal Hessian"))
    }

    /// Random starting point θ₁.
    fn init_theta(&self, rng: &mut ChainRng) -> ParamVector;

    fn check_dim(&self, theta: &[f64]) -> Result<()> {
        if theta.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: theta.len(),
            })
        }
    }
}

/// Models that map a feature row to a distribution over classes.
pub trait Classifier: Model {
    fn num_classes(&self) -> usize;

    fn predict_proba(&self, theta: &[f64], x: Row<'_>) -> Result<Vec<f64>>;

    /// Class index of a dataset label, `None` if the label is not in the label set.
    fn class_of(&self, label: i32) -> Option<usize>;
}
