//! Preconditioned stochastic gradient Langevin dynamics (pSGLD).
//!
//! The crate is `no_std` and only needs `alloc`. It contains:
//!
//! * [`model_api`]: the contract a sampled target implements (prior and
//!   minibatch log-likelihood gradients, optional diagonal Hessian).
//! * [`models`]: a diagonal Gaussian target, Bayesian logistic regression and a
//!   ReLU multilayer perceptron with hand-written backpropagation.
//! * [`samplers`]: SGD, SGLD, pSGLD (RMSprop preconditioner, with or without
//!   the Γ correction), the RMSprop baseline, step-size schedules and the chain
//!   driver.
//! * [`diagnostics`]: autocovariance, integrated autocorrelation time,
//!   effective sample size, posterior averages, thinning, risk decomposition
//!   and posterior predictive ensembling.
//! * [`oracle`]: random-walk Metropolis–Hastings and grid quadrature used as
//!   ground truth.
//!
//! Everything is `f64`. File formats, dataset loaders and the command line
//! live in the companion `psgld` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod dataset;
pub mod diagnostics;
mod error;
pub mod model_api;
pub mod models;
pub mod oracle;
pub mod rng;
pub mod samplers;
pub mod synth;
pub mod trace;

pub use dataset::{Dataset, Features, Row};
pub use error::{Error, Result};
pub use model_api::{Classifier, GradientEstimate, Minibatch, Model, ParamVector, PriorConfig};
pub use rng::{ChainRng, NoiseSource};
pub use samplers::{
    run_chain, Algorithm, PreconditionerState, SamplerConfig, StepSchedule, StepUnits,
};
pub use trace::{SampleTrace, TraceMeta};
