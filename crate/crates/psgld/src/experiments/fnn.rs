//! Desk-scale feed-forward network on an MNIST subset: ensemble test error of
//! SGD, SGLD, pSGLD and RMSprop under one seed and one iteration budget.

use std::sync::Arc;

use psgld_core::diagnostics::Ensemble;
use psgld_core::models::MlpModel;
use psgld_core::samplers::run_chain_with;
use psgld_core::{Algorithm, PriorConfig, SamplerConfig, StepSchedule, StepUnits};

use super::{eps_list, ExperimentOutput};
use crate::data_io::locate::load_mnist;
use crate::data_io::RunConfig;
use crate::error::{Error, Result};
use crate::metrics::{num, Curve, MetricsDocument};

#[derive(Debug, Clone, PartialEq)]
pub struct FnnSettings {
    pub hidden: usize,
    pub train_limit: usize,
    pub test_limit: Option<usize>,
    pub epochs: usize,
    pub minibatch_size: usize,
    /// Step size of the preconditioned methods (pSGLD, RMSprop).
    pub eps_preconditioned: f64,
    /// Step size of SGD and SGLD.
    pub eps_plain: f64,
    pub decay_epochs: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub sigma_sq: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub gamma_term: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FnnRun {
    pub algorithm: Algorithm,
    pub eps: f64,
    pub samples: usize,
    pub test_error: f64,
}

#[derive(Debug, Clone)]
pub struct FnnReport {
    pub runs: Vec<FnnRun>,
    pub output: ExperimentOutput,
}

impl FnnReport {
    pub fn error_of(&self, alg: Algorithm) -> f64 {
        self.runs
            .iter()
            .find(|r| r.algorithm == alg)
            .map_or(f64::NAN, |r| r.test_error)
    }
}

impl FnnSettings {
    pub fn new(seed: u64) -> Self {
        Self {
            hidden: 100,
            train_limit: 10_000,
            test_limit: None,
            epochs: 5,
            minibatch_size: 100,
            eps_preconditioned: 5e-4,
            eps_plain: 5e-1,
            decay_epochs: 20,
            burn_in: 300,
            thinning: 100,
            sigma_sq: 1.0,
            alpha: 0.99,
            lambda: 1e-5,
            gamma_term: false,
            seed,
        }
    }

    /// `eps` takes one value for both groups or `preconditioned,plain`.
    pub fn from_config(cfg: &RunConfig, seed: u64) -> Result<Self> {
        let d = Self::new(seed);
        let eps = eps_list(cfg, &[d.eps_preconditioned, d.eps_plain])?;
        let (eps_preconditioned, eps_plain) = match eps[..] {
            [e] => (e, e),
            [p, s] => (p, s),
            _ => return Err(Error::config("eps", "give one or two step sizes")),
        };
        Ok(Self {
            hidden: cfg.parsed_or("hidden", d.hidden)?,
            train_limit: cfg.parsed_or("train_limit", d.train_limit)?,
            test_limit: match cfg.get("test_limit") {
                Some(_) => Some(cfg.required("test_limit")?),
                None => None,
            },
            epochs: d.epochs,
            minibatch_size: cfg.parsed_or("minibatch_size", d.minibatch_size)?,
            eps_preconditioned,
            eps_plain,
            decay_epochs: cfg.parsed_or("decay_epochs", d.decay_epochs)?,
            burn_in: cfg.parsed_or("burn_in", d.burn_in)?,
            thinning: cfg.parsed_or("thinning", d.thinning)?,
            sigma_sq: cfg.parsed_or("prior_sigma_sq", d.sigma_sq)?,
            alpha: cfg.parsed_or("alpha", d.alpha)?,
            lambda: cfg.parsed_or("lambda", d.lambda)?,
            gamma_term: cfg.parsed_or("gamma_term", d.gamma_term)?,
            seed,
        })
    }

    pub fn iters_per_epoch(&self, n: usize) -> usize {
        n.div_ceil(self.minibatch_size).max(1)
    }

    pub fn run(&self) -> Result<FnnReport> {
        let (train, test, source) = load_mnist(Some(self.train_limit), self.test_limit)?;
        let per_epoch = self.iters_per_epoch(train.len());
        let total_iters = per_epoch * self.epochs;
        let sizes = vec![train.cols(), self.hidden, 10];
        let model = MlpModel::new(sizes.clone(), PriorConfig::new(self.sigma_sq)?, Arc::new(train))?;

        let mut doc = MetricsDocument::new("fnn_small", self.seed);
        doc.echo("dataset", source.describe());
        doc.echo(
            "layer_sizes",
            sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("-"),
        );
        doc.echo("train_rows", model.dataset().len());
        doc.echo("test_rows", test.len());
        doc.echo("epochs", self.epochs);
        doc.echo("total_iters", total_iters);
        doc.echo("minibatch_size", self.minibatch_size);
        doc.echo("schedule", "block_decay");
        doc.echo("decay_epochs", self.decay_epochs);
        doc.echo("epoch_len", per_epoch);
        doc.echo("step_units", StepUnits::PerDatum.name());
        doc.echo("eps_preconditioned", num(self.eps_preconditioned));
        doc.echo("eps_plain", num(self.eps_plain));
        doc.echo("burn_in", self.burn_in);
        doc.echo("thinning", self.thinning);
        doc.echo("prior_sigma_sq", num(self.sigma_sq));
        doc.echo("alpha", num(self.alpha));
        doc.echo("lambda", num(self.lambda));
        doc.echo("gamma_term", self.gamma_term);
        doc.echo("prediction", "unweighted ensemble of recorded samples");
        let mut output = ExperimentOutput::new(doc);

        let mut runs = Vec::new();
        let mut summary = Curve::new(&["algorithm", "eps", "samples", "test_error_percent"]);
        for alg in [Algorithm::Sgd, Algorithm::Sgld, Algorithm::Psgld, Algorithm::Rmsprop] {
            let eps = if alg.preconditioned() {
                self.eps_preconditioned
            } else {
                self.eps_plain
            };
            let schedule = StepSchedule::block_decay(eps, self.decay_epochs, per_epoch)?;
            let mut c = SamplerConfig::new(alg, schedule, total_iters);
            c.step_units = StepUnits::PerDatum;
            c.minibatch_size = self.minibatch_size;
            c.burn_in = self.burn_in;
            c.thinning = self.thinning;
            c.seed = self.seed;
            c.alpha = self.alpha;
            c.lambda = self.lambda;
            c.gamma_term = self.gamma_term && alg == Algorithm::Psgld;
            let mut ensemble = Ensemble::new(&model, &test)?;
            let mut curve = Curve::new(&["iteration", "test_error_percent"]);
            let mut failure = None;
            run_chain_with(&model, &c, None, |ev| {
                if !ev.recorded || failure.is_some() {
                    return;
                }
                match ensemble
                    .add(&model, &test, ev.theta)
                    .and_then(|_| ensemble.error_percent())
                {
                    Ok(e) => curve.push(vec![ev.iteration.to_string(), num(e)]),
                    Err(e) => failure = Some(e),
                }
            })?;
            if let Some(e) = failure {
                return Err(e.into());
            }
            let run = FnnRun {
                algorithm: alg,
                eps,
                samples: ensemble.members(),
                test_error: ensemble.error_percent()?,
            };
            summary.push(vec![
                alg.name().into(),
                num(eps),
                run.samples.to_string(),
                num(run.test_error),
            ]);
            output
                .metrics
                .push(format!("test_error_{}", alg.name()), run.test_error, "percent");
            output.curves.push((format!("fnn_small_{}", alg.name()), curve));
            runs.push(run);
        }
        output.curves.push(("fnn_small".into(), summary));
        Ok(FnnReport { runs, output })
    }
}
