//! Bayesian logistic regression: oracle agreement and sampling efficiency on
//! the Australian data, predictive error on a9a.

use std::sync::Arc;

use psgld_core::diagnostics::{integrated_act, mc_standard_error, posterior_mean, Ensemble};
use psgld_core::models::LogisticRegression;
use psgld_core::oracle::{mh_chain, tune_proposal, MhConfig};
use psgld_core::samplers::run_chain_with;
use psgld_core::{run_chain, Algorithm, PriorConfig, SampleTrace, SamplerConfig, StepSchedule, StepUnits};

use super::{distance_and_se, eps_list, median, run_seeds, ExperimentOutput};
use crate::data_io::locate::{load_a9a, load_australian, Source};
use crate::data_io::RunConfig;
use crate::error::Result;
use crate::metrics::{num, Curve, MetricsDocument};

/// Seed of the synthetic stand-in used when the Australian file is absent.
pub const AUSTRALIAN_FALLBACK_SEED: u64 = 1;
pub const AUSTRALIAN_SIGMA_SQ: f64 = 100.0;

pub fn australian_model() -> Result<(LogisticRegression, Source)> {
    let (data, source) = load_australian(Some(AUSTRALIAN_FALLBACK_SEED))?;
    let model = LogisticRegression::new(Arc::new(data), PriorConfig::new(AUSTRALIAN_SIGMA_SQ)?)?;
    Ok((model, source))
}

/// Posterior mean and per-coordinate Monte Carlo standard error of a trace.
fn mean_se(trace: &SampleTrace) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = posterior_mean(trace)?.into_inner();
    let se = (0..trace.dim())
        .map(|i| mc_standard_error(&trace.coordinate(i)))
        .collect::<psgld_core::Result<Vec<_>>>()?;
    Ok((m, se))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AustralianSettings {
    pub eps: Vec<f64>,
    pub runs: usize,
    pub total_iters: usize,
    pub burn_in: usize,
    pub minibatch_size: usize,
    pub mh_steps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AustralianRow {
    pub eps: f64,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub min_ess: f64,
    /// Distance from the oracle mean.
    pub distance: f64,
    /// Norm of the chain and oracle standard errors combined.
    pub combined_se: f64,
}

impl AustralianRow {
    /// `distance / (3·combined_se)`; at most 1 means agreement.
    pub fn oracle_ratio(&self) -> f64 {
        self.distance / (3.0 * self.combined_se)
    }
}

#[derive(Debug, Clone)]
pub struct AustralianReport {
    pub rows: Vec<AustralianRow>,
    pub oracle_mean: Vec<f64>,
    pub oracle_acceptance: f64,
    pub source: Source,
    pub output: ExperimentOutput,
}

impl AustralianReport {
    fn select(&self, eps: f64, alg: Algorithm) -> impl Iterator<Item = &AustralianRow> {
        self.rows.iter().filter(move |r| r.eps == eps && r.algorithm == alg)
    }

    pub fn median_min_ess(&self, eps: f64, alg: Algorithm) -> f64 {
        median(&self.select(eps, alg).map(|r| r.min_ess).collect::<Vec<_>>())
    }

    pub fn median_oracle_ratio(&self, eps: f64, alg: Algorithm) -> f64 {
        median(&self.select(eps, alg).map(|r| r.oracle_ratio()).collect::<Vec<_>>())
    }
}

impl AustralianSettings {
    pub fn new(seed: u64) -> Self {
        Self {
            eps: vec![1e-7, 1e-6, 1e-5, 1e-4],
            runs: 50,
            total_iters: 5_000,
            burn_in: 1_000,
            minibatch_size: 5,
            mh_steps: 1_000_000,
            seed,
        }
    }

    pub fn from_config(cfg: &RunConfig, seed: u64) -> Result<Self> {
        let d = Self::new(seed);
        Ok(Self {
            eps: eps_list(cfg, &d.eps)?,
            runs: cfg.parsed_or("runs", d.runs)?,
            total_iters: cfg.parsed_or("total_iters", d.total_iters)?,
            burn_in: cfg.parsed_or("burn_in", d.burn_in)?,
            minibatch_size: cfg.parsed_or("minibatch_size", d.minibatch_size)?,
            mh_steps: cfg.parsed_or("mh_steps", d.mh_steps)?,
            seed,
        })
    }

    pub fn run(&self) -> Result<AustralianReport> {
        let (model, source) = australian_model()?;

        let base = MhConfig {
            thinning: 10,
            ..MhConfig::new(0.05, self.mh_steps, self.mh_steps / 100, self.seed ^ 0x4D48)
        };
        let tuned = tune_proposal(&model, &base, None, 2_000, true)?;
        let oracle = mh_chain(&model, &tuned.config, Some(tuned.warm_start.clone()))?;
        let (oracle_mean, oracle_se) = mean_se(&oracle.trace)?;

        let mut rows = Vec::new();
        let mut traces = Vec::new();
        let largest = self.eps.iter().cloned().fold(f64::MIN, f64::max);
        for &eps in &self.eps {
            for (k, seed) in run_seeds(self.seed, self.runs).enumerate() {
                for alg in [Algorithm::Sgld, Algorithm::Psgld] {
                    let mut c = SamplerConfig::new(alg, StepSchedule::constant(eps)?, self.total_iters);
                    c.burn_in = self.burn_in;
                    c.minibatch_size = self.minibatch_size;
                    c.seed = seed;
                    let trace = run_chain(&model, &c)?;
                    let min_ess = (0..trace.dim())
                        .map(|i| {
                            integrated_act(&trace.coordinate(i))
                                .map(|(_, tau)| psgld_core::diagnostics::ess(trace.len(), tau))
                        })
                        .collect::<psgld_core::Result<Vec<_>>>()?
                        .into_iter()
                        .fold(f64::INFINITY, f64::min);
                    let (m, se) = mean_se(&trace)?;
                    let (distance, combined_se) = distance_and_se(&m, &se, &oracle_mean, &oracle_se);
                    rows.push(AustralianRow {
                        eps,
                        algorithm: alg,
                        seed,
                        min_ess,
                        distance,
                        combined_se,
                    });
                    if k == 0 && eps == largest {
                        traces.push((format!("blr_australian_{}", alg.name()), trace));
                    }
                }
            }
        }

        let mut doc = MetricsDocument::new("blr_australian", self.seed);
        doc.echo("dataset", source.describe());
        doc.echo("prior_sigma_sq", AUSTRALIAN_SIGMA_SQ);
        doc.echo("minibatch_size", self.minibatch_size);
        doc.echo("total_iters", self.total_iters);
        doc.echo("burn_in", self.burn_in);
        doc.echo("runs", self.runs);
        doc.echo("eps", self.eps.iter().map(|e| num(*e)).collect::<Vec<_>>().join(","));
        doc.echo("oracle", "random-walk metropolis-hastings, pilot-tuned");
        doc.echo("oracle_steps", self.mh_steps);
        doc.echo("oracle_proposal_std", num(tuned.config.proposal_std));
        doc.echo("error_metric", "euclidean distance of posterior means");
        if let Source::Synthetic(s) = &source {
            doc.note(format!("Australian file not found; using the synthetic stand-in {s}"));
        }
        doc.push("oracle_acceptance_rate", oracle.acceptance_rate, "fraction");

        let mut report = AustralianReport {
            rows,
            oracle_mean,
            oracle_acceptance: oracle.acceptance_rate,
            source,
            output: ExperimentOutput::new(doc),
        };
        let mut summary = Curve::new(&["eps", "algorithm", "median_min_ess", "median_oracle_ratio"]);
        let mut runs = Curve::new(&["eps", "algorithm", "seed", "min_ess", "distance", "combined_se"]);
        for r in &report.rows {
            runs.push(vec![
                num(r.eps),
                r.algorithm.name().into(),
                r.seed.to_string(),
                num(r.min_ess),
                num(r.distance),
                num(r.combined_se),
            ]);
        }
        for &eps in &self.eps {
            for alg in [Algorithm::Sgld, Algorithm::Psgld] {
                let e = report.median_min_ess(eps, alg);
                let q = report.median_oracle_ratio(eps, alg);
                summary.push(vec![num(eps), alg.name().into(), num(e), num(q)]);
                let tag = format!("{}_eps{}", alg.name(), num(eps));
                report.output.metrics.push(format!("median_min_ess_{tag}"), e, "samples");
                report.output.metrics.push(format!("median_oracle_ratio_{tag}"), q, "3 combined se");
            }
        }
        report.output.curves.push(("blr_australian".into(), summary));
        report.output.curves.push(("blr_australian_runs".into(), runs));
        report.output.traces = traces;
        report.output.traces.push(("blr_australian_mh".into(), oracle.trace));
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct A9aSettings {
    pub eps: f64,
    pub step_units: StepUnits,
    pub minibatch_size: usize,
    pub sigma_sq: f64,
    pub thinning: usize,
    pub burn_in: usize,
    pub total_iters: usize,
    /// Error level whose first crossing is reported.
    pub target_error: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct A9aRun {
    pub algorithm: Algorithm,
    /// `(iteration, ensemble test error %)` at each recorded sample.
    pub curve: Vec<(usize, f64)>,
}

impl A9aRun {
    pub fn final_error(&self) -> f64 {
        self.curve.last().map_or(f64::NAN, |c| c.1)
    }

    /// First recorded iteration whose ensemble error is at most `level`.
    pub fn first_reaching(&self, level: f64) -> Option<usize> {
        self.curve.iter().find(|c| c.1 <= level).map(|c| c.0)
    }
}

#[derive(Debug, Clone)]
pub struct A9aReport {
    pub runs: Vec<A9aRun>,
    pub output: ExperimentOutput,
}

impl A9aReport {
    pub fn run_of(&self, alg: Algorithm) -> Option<&A9aRun> {
        self.runs.iter().find(|r| r.algorithm == alg)
    }
}

impl A9aSettings {
    pub fn new(seed: u64) -> Self {
        Self {
            eps: 5e-2,
            step_units: StepUnits::PerDatum,
            minibatch_size: 50,
            sigma_sq: 10.0,
            thinning: 50,
            burn_in: 500,
            total_iters: 15_000,
            target_error: 15.0,
            seed,
        }
    }

    pub fn from_config(cfg: &RunConfig, seed: u64) -> Result<Self> {
        let d = Self::new(seed);
        Ok(Self {
            eps: cfg.parsed_or("eps", d.eps)?,
            step_units: cfg.parsed_or("step_units", d.step_units)?,
            minibatch_size: cfg.parsed_or("minibatch_size", d.minibatch_size)?,
            sigma_sq: cfg.parsed_or("prior_sigma_sq", d.sigma_sq)?,
            thinning: cfg.parsed_or("thinning", d.thinning)?,
            burn_in: cfg.parsed_or("burn_in", d.burn_in)?,
            total_iters: cfg.parsed_or("total_iters", d.total_iters)?,
            seed,
            ..d
        })
    }

    pub fn run(&self) -> Result<A9aReport> {
        let (train, test, source) = load_a9a()?;
        let model = LogisticRegression::new(Arc::new(train), PriorConfig::new(self.sigma_sq)?)?;
        let mut doc = MetricsDocument::new("blr_a9a", self.seed);
        doc.echo("dataset", source.describe());
        doc.echo("eps", num(self.eps));
        doc.echo("step_units", self.step_units.name());
        doc.echo("minibatch_size", self.minibatch_size);
        doc.echo("prior_sigma_sq", num(self.sigma_sq));
        doc.echo("thinning", self.thinning);
        doc.echo("burn_in", self.burn_in);
        doc.echo("total_iters", self.total_iters);
        doc.echo("prediction", "unweighted ensemble of recorded samples");

        let mut output = ExperimentOutput::new(doc);
        let mut runs = Vec::new();
        for alg in [Algorithm::Sgld, Algorithm::Psgld] {
            let mut c = SamplerConfig::new(alg, StepSchedule::constant(self.eps)?, self.total_iters);
            c.step_units = self.step_units;
            c.minibatch_size = self.minibatch_size;
            c.burn_in = self.burn_in;
            c.thinning = self.thinning;
            c.seed = self.seed;
            let mut ensemble = Ensemble::new(&model, &test)?;
            let mut curve = Vec::new();
            let mut failure = None;
            let trace = run_chain_with(&model, &c, None, |ev| {
                if !ev.recorded || failure.is_some() {
                    return;
                }
                match ensemble
                    .add(&model, &test, ev.theta)
                    .and_then(|_| ensemble.error_percent())
                {
                    Ok(e) => curve.push((ev.iteration, e)),
                    Err(e) => failure = Some(e),
                }
            })?;
            if let Some(e) = failure {
                return Err(e.into());
            }
            let run = A9aRun { algorithm: alg, curve };
            let mut csv = Curve::new(&["iteration", "test_error_percent"]);
            for (t, e) in &run.curve {
                csv.push(vec![t.to_string(), num(*e)]);
            }
            output.metrics.push(format!("final_test_error_{}", alg.name()), run.final_error(), "percent");
            if let Some(t) = run.first_reaching(self.target_error) {
                output.metrics.push(
                    format!("first_iteration_at_{}pct_{}", num(self.target_error), alg.name()),
                    t as f64,
                    "iterations",
                );
            }
            output.curves.push((format!("blr_a9a_{}", alg.name()), csv));
            output.traces.push((format!("blr_a9a_{}", alg.name()), trace));
            runs.push(run);
        }
        Ok(A9aReport { runs, output })
    }
}
