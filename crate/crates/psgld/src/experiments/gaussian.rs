//! The two-dimensional Gaussian simulation: covariance recovery and
//! autocorrelation of SGLD against pSGLD over a step-size grid.

use psgld_core::diagnostics::covariance_error;
use psgld_core::models::GaussianTarget;
use psgld_core::{run_chain, Algorithm, SamplerConfig, StepSchedule};

use super::{eps_list, median, run_seeds, ExperimentOutput};
use crate::data_io::RunConfig;
use crate::error::Result;
use crate::fft::act_ess_fft;
use crate::metrics::{num, Curve, MetricsDocument};

/// Diagonal of the simulated covariance.
pub const SIM_COV: [f64; 2] = [0.16, 1.0];

pub fn sim_target() -> GaussianTarget {
    GaussianTarget::centered(SIM_COV.to_vec()).expect("valid covariance")
}

pub fn sim_true_cov() -> Vec<f64> {
    sim_target().covariance_matrix()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sim2dSettings {
    pub eps: Vec<f64>,
    pub runs: usize,
    pub total_iters: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Sim2dSettings {
    pub fn new(seed: u64) -> Self {
        Self {
            eps: vec![0.03, 0.1, 0.3],
            runs: 10,
            total_iters: 200_000,
            burn_in: 1_000,
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
            seed,
        })
    }

    pub fn run(&self) -> Result<Sim2dReport> {
        let target = sim_target();
        let truth = sim_true_cov();
        let mut rows = Vec::new();
        let mut traces = Vec::new();
        let largest = self.eps.iter().cloned().fold(f64::MIN, f64::max);
        for &eps in &self.eps {
            for (k, seed) in run_seeds(self.seed, self.runs).enumerate() {
                for alg in [Algorithm::Sgld, Algorithm::Psgld] {
                    let mut c = SamplerConfig::new(alg, StepSchedule::constant(eps)?, self.total_iters);
                    c.burn_in = self.burn_in;
                    c.seed = seed;
                    let trace = run_chain(&target, &c)?;
                    let cov_error = covariance_error(&trace, &truth)?;
                    let mut act = [0.0; 2];
                    for (i, a) in act.iter_mut().enumerate() {
                        *a = act_ess_fft(&trace.coordinate(i))?.0;
                    }
                    rows.push(Sim2dRow {
                        eps,
                        algorithm: alg,
                        seed,
                        cov_error,
                        act,
                    });
                    if k == 0 && eps == largest {
                        traces.push((format!("sim2d_{}", alg.name()), trace));
                    }
                }
            }
        }
        let mut report = Sim2dReport {
            rows,
            output: ExperimentOutput::new(MetricsDocument::new("sim2d", self.seed)),
        };
        report.fill_output(self, traces);
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sim2dRow {
    pub eps: f64,
    pub algorithm: Algorithm,
    pub seed: u64,
    /// Frobenius norm of the sample covariance residual.
    pub cov_error: f64,
    pub act: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct Sim2dReport {
    pub rows: Vec<Sim2dRow>,
    pub output: ExperimentOutput,
}

impl Sim2dReport {
    fn select(&self, eps: f64, alg: Algorithm) -> impl Iterator<Item = &Sim2dRow> {
        self.rows
            .iter()
            .filter(move |r| r.eps == eps && r.algorithm == alg)
    }

    pub fn median_cov_error(&self, eps: f64, alg: Algorithm) -> f64 {
        median(&self.select(eps, alg).map(|r| r.cov_error).collect::<Vec<_>>())
    }

    pub fn median_act(&self, eps: f64, alg: Algorithm, coord: usize) -> f64 {
        median(&self.select(eps, alg).map(|r| r.act[coord]).collect::<Vec<_>>())
    }

    fn fill_output(&mut self, s: &Sim2dSettings, traces: Vec<(String, psgld_core::SampleTrace)>) {
        let m = &mut self.output.metrics;
        m.echo("target", "N(0, diag(0.16, 1))");
        m.echo("eps", s.eps.iter().map(|e| num(*e)).collect::<Vec<_>>().join(","));
        m.echo("runs", s.runs);
        m.echo("total_iters", s.total_iters);
        m.echo("burn_in", s.burn_in);
        m.echo("schedule", "constant");
        m.echo("error_metric", "frobenius norm of (sample covariance, 1/n) - true covariance");
        m.echo("act_truncation", "initial positive sequence");

        let mut all = Curve::new(&["eps", "algorithm", "seed", "cov_error", "act_0", "act_1"]);
        for r in &self.rows {
            all.push(vec![
                num(r.eps),
                r.algorithm.name().into(),
                r.seed.to_string(),
                num(r.cov_error),
                num(r.act[0]),
                num(r.act[1]),
            ]);
        }
        let mut summary = Curve::new(&["eps", "algorithm", "median_cov_error", "median_act_0", "median_act_1"]);
        let mut metrics = Vec::new();
        for &eps in &s.eps {
            for alg in [Algorithm::Sgld, Algorithm::Psgld] {
                let e = self.median_cov_error(eps, alg);
                let a0 = self.median_act(eps, alg, 0);
                let a1 = self.median_act(eps, alg, 1);
                summary.push(vec![num(eps), alg.name().into(), num(e), num(a0), num(a1)]);
                let tag = format!("{}_eps{}", alg.name(), num(eps));
                metrics.push((format!("median_cov_error_{tag}"), e, "frobenius"));
                metrics.push((format!("median_act0_{tag}"), a0, "iterations"));
                metrics.push((format!("median_act1_{tag}"), a1, "iterations"));
            }
        }
        for (n, v, u) in metrics {
            self.output.metrics.push(n, v, u);
        }
        self.output.curves.push(("sim2d_runs".into(), all));
        self.output.curves.push(("sim2d".into(), summary));
        self.output.traces = traces;
    }
}
