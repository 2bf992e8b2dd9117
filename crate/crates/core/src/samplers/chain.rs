//! The chain driver: minibatch selection, preconditioner bookkeeping and
//! recording.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use super::precond::PreconditionerState;
use super::schedule::StepSchedule;
use super::step::{psgld_step, rmsprop_step, sgd_step, sgld_step};
use crate::error::{Error, Result};
use crate::model_api::{Minibatch, Model, ParamVector};
use crate::rng::ChainRng;
use crate::trace::{SampleTrace, TraceMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Sgd,
    Sgld,
    Psgld,
    Rmsprop,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Sgd,
        Algorithm::Sgld,
        Algorithm::Psgld,
        Algorithm::Rmsprop,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Sgd => "sgd",
            Algorithm::Sgld => "sgld",
            Algorithm::Psgld => "psgld",
            Algorithm::Rmsprop => "rmsprop",
        }
    }

    /// True for the two Langevin samplers.
    pub fn injects_noise(self) -> bool {
        matches!(self, Algorithm::Sgld | Algorithm::Psgld)
    }

    pub fn preconditioned(self) -> bool {
        matches!(self, Algorithm::Psgld | Algorithm::Rmsprop)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == lower)
            .ok_or_else(|| Error::invalid("algorithm", format!("unknown algorithm {s:?}")))
    }
}

/// How the schedule's `ε_t` maps onto the update.
///
/// `Posterior` uses `ε_t` as is. `PerDatum` uses `ε_t / N`, i.e. `ε_t` is a
/// step on the average per-datum log posterior, which is the scale at which
/// optimiser step sizes are usually quoted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepUnits {
    #[default]
    Posterior,
    PerDatum,
}

impl StepUnits {
    pub fn name(self) -> &'static str {
        match self {
            StepUnits::Posterior => "posterior",
            StepUnits::PerDatum => "per_datum",
        }
    }

    pub fn effective(self, eps: f64, data_len: usize) -> f64 {
        match self {
            StepUnits::Posterior => eps,
            StepUnits::PerDatum => eps / data_len as f64,
        }
    }
}

impl FromStr for StepUnits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "posterior" => Ok(StepUnits::Posterior),
            "per_datum" => Ok(StepUnits::PerDatum),
            other => Err(Error::invalid(
                "step_units",
                format!("expected posterior or per_datum, got {other:?}"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub algorithm: Algorithm,
    pub schedule: StepSchedule,
    pub step_units: StepUnits,
    /// Iterations discarded before recording starts.
    pub burn_in: usize,
    pub thinning: usize,
    pub total_iters: usize,
    pub minibatch_size: usize,
    pub seed: u64,
    /// Adds the Γ correction to pSGLD. Needs a model with a diagonal Hessian.
    pub gamma_term: bool,
    pub alpha: f64,
    pub lambda: f64,
}

impl SamplerConfig {
    /// No burn-in, no thinning, minibatch of one, seed 0, Γ off and the
    /// default RMSprop constants.
    pub fn new(algorithm: Algorithm, schedule: StepSchedule, total_iters: usize) -> Self {
        Self {
            algorithm,
            schedule,
            step_units: StepUnits::Posterior,
            burn_in: 0,
            thinning: 1,
            total_iters,
            minibatch_size: 1,
            seed: 0,
            gamma_term: false,
            alpha: PreconditionerState::DEFAULT_ALPHA,
            lambda: PreconditionerState::DEFAULT_LAMBDA,
        }
    }

    /// Model-independent checks.
    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if self.total_iters == 0 {
            return Err(Error::invalid("total_iters", "must be positive"));
        }
        if self.burn_in >= self.total_iters {
            return Err(Error::invalid("burn_in", "must be smaller than total_iters"));
        }
        if self.thinning == 0 || self.thinning > self.total_iters - self.burn_in {
            return Err(Error::invalid(
                "thinning",
                "must lie in [1, total_iters - burn_in]",
            ));
        }
        if self.minibatch_size == 0 {
            return Err(Error::invalid("minibatch_size", "must be positive"));
        }
        if self.gamma_term && self.algorithm != Algorithm::Psgld {
            return Err(Error::invalid("gamma_term", "only applies to psgld"));
        }
        if self.algorithm.preconditioned() {
            PreconditionerState::new(0, self.alpha, self.lambda)?;
        }
        Ok(())
    }

    pub fn validate_for(&self, model: &dyn Model) -> Result<()> {
        self.validate()?;
        if self.minibatch_size > model.data_len() {
            return Err(Error::invalid(
                "minibatch_size",
                format!("exceeds the {} data points", model.data_len()),
            ));
        }
        if self.gamma_term && !model.supports_diag_hessian() {
            return Err(Error::Unsupported("diagonal Hessian (needed by gamma_term)"));
        }
        Ok(())
    }

    /// Iteration `t` (1-based) is recorded.
    pub fn records(&self, t: usize) -> bool {
        t > self.burn_in && (t - self.burn_in).is_multiple_of(self.thinning)
    }

    fn schedule_label(&self) -> String {
        format!("{};units={}", self.schedule.describe(), self.step_units.name())
    }
}

/// Minibatches drawn without replacement from a reshuffled permutation.
///
/// When fewer than `batch` indices remain in the current pass, the whole
/// permutation is reshuffled and reading starts over.
#[derive(Debug, Clone)]
pub struct EpochSampler {
    order: Vec<usize>,
    pos: usize,
    batch: usize,
    rng: ChainRng,
}

impl EpochSampler {
    pub fn new(data_len: usize, batch: usize, rng: ChainRng) -> Result<Self> {
        if batch == 0 || batch > data_len {
            return Err(Error::invalid("minibatch_size", "must lie in [1, N]"));
        }
        Ok(Self {
            order: (0..data_len).collect(),
            pos: data_len,
            batch,
            rng,
        })
    }

    pub fn next_batch(&mut self) -> Minibatch {
        if self.batch == self.order.len() {
            return Minibatch::from_permutation(self.order.clone());
        }
        if self.order.len() - self.pos < self.batch {
            self.rng.shuffle(&mut self.order);
            self.pos = 0;
        }
        let idx = self.order[self.pos..self.pos + self.batch].to_vec();
        self.pos += self.batch;
        Minibatch::from_permutation(idx)
    }
}

/// What the observer sees after each completed iteration.
#[derive(Debug)]
pub struct StepEvent<'a> {
    /// 1-based iteration index.
    pub iteration: usize,
    pub theta: &'a [f64],
    /// Effective step size used at this iteration.
    pub eps: f64,
    pub recorded: bool,
}

/// Runs one chain from the model's random initialisation.
pub fn run_chain(model: &dyn Model, config: &SamplerConfig) -> Result<SampleTrace> {
    run_chain_with(model, config, None, |_| {})
}

/// Runs one chain, optionally from `init`, calling `observer` after every
/// iteration.
///
/// Randomness comes from two streams of `config.seed`: stream 0 draws the
/// initial point and the injected noise, stream 1 draws minibatches. Chains of
/// different algorithms under one seed therefore start at the same point and
/// see the same minibatch sequence.
pub fn run_chain_with(
    model: &dyn Model,
    config: &SamplerConfig,
    init: Option<ParamVector>,
    mut observer: impl FnMut(&StepEvent<'_>),
) -> Result<SampleTrace> {
    config.validate_for(model)?;
    let dim = model.dim();
    let n_data = model.data_len();

    let mut noise = ChainRng::stream(config.seed, 0);
    let mut batches = EpochSampler::new(n_data, config.minibatch_size, ChainRng::stream(config.seed, 1))?;
    let mut theta = match init {
        Some(t) => {
            model.check_dim(&t)?;
            t
        }
        None => model.init_theta(&mut noise),
    };
    if !theta.is_finite() {
        return Err(Error::NonFinite);
    }

    let mut precond = if config.algorithm.preconditioned() {
        Some(PreconditionerState::new(dim, config.alpha, config.lambda)?)
    } else {
        None
    };
    let mut g_diag = vec![0.0; dim];
    let mut gamma = vec![0.0; dim];

    let mut trace = SampleTrace::empty(TraceMeta {
        algorithm: String::from(config.algorithm.name()),
        dim,
        total_iters: config.total_iters,
        burn_in: config.burn_in,
        thinning: config.thinning,
        seed: config.seed,
        schedule: config.schedule_label(),
    });

    let mut last_norm = theta.norm();
    for t in 1..=config.total_iters {
        let eps = config
            .step_units
            .effective(config.schedule.step_size(t), n_data);
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::invalid(
                "step size",
                format!("schedule produced eps = {eps} at iteration {t}"),
            ));
        }
        let batch = batches.next_batch();
        let grad = model.minibatch_grad(&theta, &batch)?;
        let prior_grad = model.log_prior_grad(&theta);
        if let Some(state) = precond.as_mut() {
            state.update_into(&grad.g_bar, &mut g_diag);
        }

        let stepped = match config.algorithm {
            Algorithm::Sgd => sgd_step(&mut theta, &prior_grad, &grad, eps),
            Algorithm::Sgld => sgld_step(&mut theta, &prior_grad, &grad, eps, &mut noise),
            Algorithm::Rmsprop => rmsprop_step(&mut theta, &prior_grad, &grad, &g_diag, eps),
            Algorithm::Psgld => {
                let gamma_ref = if config.gamma_term {
                    let hess = model.diag_hessian(&theta, &batch)?;
                    precond
                        .as_ref()
                        .expect("psgld owns a preconditioner")
                        .gamma_term_into(&grad.g_bar, &hess, &mut gamma);
                    Some(&gamma[..])
                } else {
                    None
                };
                psgld_step(&mut theta, &prior_grad, &grad, &g_diag, gamma_ref, eps, &mut noise)
            }
        };
        match stepped {
            Ok(()) => last_norm = theta.norm(),
            Err(Error::NonFinite) => {
                return Err(Error::Diverged {
                    iteration: t,
                    last_norm,
                })
            }
            Err(e) => return Err(e),
        }

        let recorded = config.records(t);
        if t > config.burn_in {
            trace.add_eps(eps);
        }
        if recorded {
            trace.push(theta.clone(), eps);
        }
        observer(&StepEvent {
            iteration: t,
            theta: &theta,
            eps,
            recorded,
        });
    }
    Ok(trace)
}
