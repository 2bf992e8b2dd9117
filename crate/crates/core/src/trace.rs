//! Recorded output of one chain.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model_api::ParamVector;

/// Post-burn-in, thinned samples with their step sizes and provenance.
///
/// `sum_eps` is `S_T`, the sum over every post-burn-in iteration, recorded or
/// not, so it is at least the sum of the recorded step sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTrace {
    algorithm: String,
    dim: usize,
    samples: Vec<(ParamVector, f64)>,
    sum_eps: f64,
    total_iters: usize,
    burn_in: usize,
    thinning: usize,
    seed: u64,
    schedule: String,
}

/// Provenance attached to a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    pub algorithm: String,
    pub dim: usize,
    pub total_iters: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub seed: u64,
    pub schedule: String,
}

impl SampleTrace {
    /// Empty trace; samples are appended with [`SampleTrace::push`].
    pub fn empty(meta: TraceMeta) -> Self {
        Self {
            algorithm: meta.algorithm,
            dim: meta.dim,
            samples: Vec::new(),
            sum_eps: 0.0,
            total_iters: meta.total_iters,
            burn_in: meta.burn_in,
            thinning: meta.thinning,
            seed: meta.seed,
            schedule: meta.schedule,
        }
    }

    /// Rebuilds a trace from stored parts, checking every invariant.
    pub fn from_parts(meta: TraceMeta, samples: Vec<(ParamVector, f64)>, sum_eps: f64) -> Result<Self> {
        if meta.thinning == 0 {
            return Err(Error::invalid("thinning", "must be at least 1"));
        }
        let mut recorded = 0.0;
        for (theta, eps) in &samples {
            if theta.len() != meta.dim {
                return Err(Error::DimensionMismatch {
                    expected: meta.dim,
                    found: theta.len(),
                });
            }
            if !(*eps > 0.0 && eps.is_finite()) {
                return Err(Error::invalid("eps", "recorded step sizes must be positive"));
            }
            if !theta.is_finite() {
                return Err(Error::NonFinite);
            }
            recorded += eps;
        }
        if !(sum_eps.is_finite() && sum_eps >= recorded * (1.0 - 1e-12)) {
            return Err(Error::invalid(
                "sum_eps",
                "must be finite and at least the sum of recorded step sizes",
            ));
        }
        let mut t = Self::empty(meta);
        t.samples = samples;
        t.sum_eps = sum_eps;
        Ok(t)
    }

    pub fn meta(&self) -> TraceMeta {
        TraceMeta {
            algorithm: self.algorithm.clone(),
            dim: self.dim,
            total_iters: self.total_iters,
            burn_in: self.burn_in,
            thinning: self.thinning,
            seed: self.seed,
            schedule: self.schedule.clone(),
        }
    }

    pub(crate) fn push(&mut self, theta: ParamVector, eps: f64) {
        debug_assert_eq!(theta.len(), self.dim);
        self.samples.push((theta, eps));
    }

    pub(crate) fn add_eps(&mut self, eps: f64) {
        self.sum_eps += eps;
    }

    pub(crate) fn set_thinning(&mut self, thinning: usize) {
        self.thinning = thinning;
    }

    pub fn algorithm(&self) -> &str {
        &self.algorithm
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples(&self) -> &[(ParamVector, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn thetas(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.samples.iter().map(|(t, _)| &t[..])
    }

    pub fn eps(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|(_, e)| *e)
    }

    /// `S_T`.
    pub fn sum_eps(&self) -> f64 {
        self.sum_eps
    }

    pub fn total_iters(&self) -> usize {
        self.total_iters
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    pub fn thinning(&self) -> usize {
        self.thinning
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn schedule(&self) -> &str {
        &self.schedule
    }

    /// Series of coordinate `i` across recorded samples.
    ///
    /// # Panics
    /// Panics if `i >= dim`.
    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        assert!(i < self.dim, "coordinate {i} out of range");
        self.samples.iter().map(|(t, _)| t[i]).collect()
    }

    /// Keeps the first `n` samples. `S_T` is left as recorded.
    pub fn truncate(&mut self, n: usize) {
        self.samples.truncate(n);
    }
}
