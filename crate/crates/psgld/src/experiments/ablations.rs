//! Empirical checks of the theory: dropping Γ, thinning, and MSE decay under
//! a decreasing step-size schedule.

use psgld_core::diagnostics::{
    mc_standard_error, posterior_average, series_ess, thin, TestFunctional,
};
use psgld_core::oracle::grid_expectation;
use std::sync::Arc;

use psgld_core::models::LogisticRegression;
use psgld_core::synth::synth_blr;
use psgld_core::{run_chain, Algorithm, Model, PriorConfig, SampleTrace, SamplerConfig, StepSchedule};

use super::blr::australian_model;
use super::gaussian::sim_target;
use super::{distance_and_se, run_seeds, ExperimentOutput};
use crate::data_io::RunConfig;
use crate::error::Result;
use crate::metrics::{num, Curve, MetricsDocument};

fn means_and_se(trace: &SampleTrace) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut m = Vec::new();
    let mut se = Vec::new();
    for i in 0..trace.dim() {
        let c = trace.coordinate(i);
        m.push(c.iter().sum::<f64>() / c.len() as f64);
        se.push(mc_standard_error(&c)?);
    }
    Ok((m, se))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaSettings {
    pub gauss_eps: f64,
    pub gauss_iters: usize,
    pub blr_eps: f64,
    pub blr_iters: usize,
    pub blr_batch: usize,
    pub burn_in: usize,
    pub seed: u64,
}

/// Γ-on against Γ-off posterior means for one target.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaComparison {
    pub target: String,
    pub mean_with: Vec<f64>,
    pub mean_without: Vec<f64>,
    pub distance: f64,
    /// Norm of the combined per-coordinate Monte Carlo standard errors.
    pub combined_se: f64,
}

impl GammaComparison {
    pub fn ratio(&self) -> f64 {
        self.distance / self.combined_se
    }
}

#[derive(Debug, Clone)]
pub struct GammaReport {
    pub comparisons: Vec<GammaComparison>,
    pub output: ExperimentOutput,
}

impl GammaSettings {
    pub fn new(seed: u64) -> Self {
        Self {
            gauss_eps: 0.1,
            gauss_iters: 200_000,
            blr_eps: 1e-4,
            blr_iters: 20_000,
            blr_batch: 5,
            burn_in: 1_000,
            seed,
        }
    }

    pub fn from_config(cfg: &RunConfig, seed: u64) -> Result<Self> {
        let d = Self::new(seed);
        Ok(Self {
            gauss_eps: cfg.parsed_or("eps", d.gauss_eps)?,
            gauss_iters: cfg.parsed_or("total_iters", d.gauss_iters)?,
            blr_iters: cfg.parsed_or("total_iters", d.blr_iters)?,
            burn_in: cfg.parsed_or("burn_in", d.burn_in)?,
            ..d
        })
    }

    fn compare(&self, name: &str, model: &dyn Model, eps: f64, iters: usize, batch: usize) -> Result<GammaComparison> {
        let mut c = SamplerConfig::new(Algorithm::Psgld, StepSchedule::constant(eps)?, iters);
        c.burn_in = self.burn_in;
        c.minibatch_size = batch;
        c.seed = self.seed;
        let off = run_chain(model, &c)?;
        c.gamma_term = true;
        let on = run_chain(model, &c)?;
        let (m_on, se_on) = means_and_se(&on)?;
        let (m_off, se_off) = means_and_se(&off)?;
        let (distance, combined_se) = distance_and_se(&m_on, &se_on, &m_off, &se_off);
        Ok(GammaComparison {
            target: name.into(),
            mean_with: m_on,
            mean_without: m_off,
            distance,
            combined_se,
        })
    }

    pub fn run(&self) -> Result<GammaReport> {
        let gauss = self.compare("gaussian2d", &sim_target(), self.gauss_eps, self.gauss_iters, 1)?;
        let (blr_model, source) = australian_model()?;
        let blr = self.compare("blr_australian", &blr_model, self.blr_eps, self.blr_iters, self.blr_batch)?;

        let mut doc = MetricsDocument::new("gamma_ablation", self.seed);
        doc.echo("alpha", 0.99);
        doc.echo("gaussian_eps", num(self.gauss_eps));
        doc.echo("gaussian_iters", self.gauss_iters);
        doc.echo("blr_eps", num(self.blr_eps));
        doc.echo("blr_iters", self.blr_iters);
        doc.echo("blr_minibatch", self.blr_batch);
        doc.echo("burn_in", self.burn_in);
        doc.echo("australian_source", source.describe());
        let mut curve = Curve::new(&["target", "coordinate", "mean_with_gamma", "mean_without_gamma"]);
        for cmp in [&gauss, &blr] {
            doc.push(format!("{}_distance", cmp.target), cmp.distance, "euclidean");
            doc.push(format!("{}_combined_se", cmp.target), cmp.combined_se, "euclidean");
            doc.push(format!("{}_distance_over_se", cmp.target), cmp.ratio(), "ratio");
            for (i, (a, b)) in cmp.mean_with.iter().zip(&cmp.mean_without).enumerate() {
                curve.push(vec![cmp.target.clone(), i.to_string(), num(*a), num(*b)]);
            }
        }
        let mut output = ExperimentOutput::new(doc);
        output.curves.push(("gamma_ablation".into(), curve));
        Ok(GammaReport {
            comparisons: vec![gauss, blr],
            output,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThinningSettings {
    pub eps: f64,
    pub total_iters: usize,
    pub burn_in: usize,
    pub k: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThinningRow {
    pub functional: String,
    pub full: f64,
    pub full_se: f64,
    pub thinned: f64,
    pub thinned_se: f64,
    pub full_ess_per_sample: f64,
    pub thinned_ess_per_sample: f64,
}

impl ThinningRow {
    /// `|full − thinned| / sqrt(se_full² + se_thinned²)`.
    pub fn z(&self) -> f64 {
        (self.full - self.thinned).abs() / self.full_se.hypot(self.thinned_se)
    }
}

#[derive(Debug, Clone)]
pub struct ThinningReport {
    pub rows: Vec<ThinningRow>,
    pub output: ExperimentOutput,
}

impl ThinningSettings {
    pub fn new(seed: u64) -> Self {
        Self {
            eps: 0.1,
            total_iters: 200_000,
            burn_in: 1_000,
            k: 5,
            seed,
        }
    }

    pub fn from_config(cfg: &RunConfig, seed: u64) -> Result<Self> {
        let d = Self::new(seed);
        Ok(Self {
            eps: cfg.parsed_or("eps", d.eps)?,
            total_iters: cfg.parsed_or("total_iters", d.total_iters)?,
            burn_in: cfg.parsed_or("burn_in", d.burn_in)?,
            k: cfg.parsed_or("thinning", d.k)?,
            seed,
        })
    }

    pub fn run(&self) -> Result<ThinningReport> {
        let mut c = SamplerConfig::new(Algorithm::Psgld, StepSchedule::constant(self.eps)?, self.total_iters);
        c.burn_in = self.burn_in;
        c.seed = self.seed;
        let full = run_chain(&sim_target(), &c)?;
        let thinned = thin(&full, self.k)?;
        let functionals = [
            TestFunctional::coordinate(0),
            TestFunctional::coordinate(1),
            TestFunctional::square(0),
            TestFunctional::square(1),
        ];
        let mut rows = Vec::new();
        for phi in &functionals {
            let a = phi.series(&full)?;
            let b = phi.series(&thinned)?;
            rows.push(ThinningRow {
                functional: phi.name().into(),
                full: posterior_average(&full, phi, false)?,
                full_se: mc_standard_error(&a)?,
                thinned: posterior_average(&thinned, phi, false)?,
                thinned_se: mc_standard_error(&b)?,
                full_ess_per_sample: series_ess(&a)? / a.len() as f64,
                thinned_ess_per_sample: series_ess(&b)? / b.len() as f64,
            });
        }
        let mut doc = MetricsDocument::new("thinning", self.seed);
        doc.echo("eps", num(self.eps));
        doc.echo("total_iters", self.total_iters);
        doc.echo("burn_in", self.burn_in);
        doc.echo("k", self.k);
        let mut curve = Curve::new(&[
            "functional",
            "full",
            "full_se",
            "thinned",
            "thinned_se",
            "full_ess_per_sample",
            "thinned_ess_per_sample",
        ]);
        for r in &rows {
            doc.push(format!("z_{}", r.functional), r.z(), "standard errors");
            doc.push(format!("ess_per_sample_full_{}", r.functional), r.full_ess_per_sample, "ratio");
            doc.push(format!("ess_per_sample_thinned_{}", r.functional), r.thinned_ess_per_sample, "ratio");
            curve.push(vec![
                r.functional.clone(),
                num(r.full),
                num(r.full_se),
                num(r.thinned),
                num(r.thinned_se),
                num(r.full_ess_per_sample),
                num(r.thinned_ess_per_sample),
            ]);
        }
        let mut output = ExperimentOutput::new(doc);
        output.curves.push(("thinning".into(), curve));
        Ok(ThinningReport { rows, output })
    }
}

/// Data seed of the synthetic regression used for MSE decay.
pub const MSE_DATA_SEED: u64 = 11;
pub const MSE_TRUE_THETA: [f64; 2] = [1.0, -0.5];

#[derive(Debug, Clone, PartialEq)]
pub struct MseDecaySettings {
    pub budgets: Vec<usize>,
    pub runs: usize,
    /// Polynomial schedule `a·(b + t)^(−gamma)`.
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    pub gamma_term: bool,
    /// Rows of the two-feature synthetic logistic regression.
    pub n: usize,
    pub minibatch_size: usize,
    pub sigma_sq: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct MseDecayReport {
    /// `(T, mean squared error)` per budget.
    pub mse: Vec<(usize, f64)>,
    pub truth: f64,
    pub output: ExperimentOutput,
}

impl MseDecayReport {
    /// Budgets at which the error went up instead of down.
    pub fn inversions(&self) -> usize {
        self.mse.windows(2).filter(|w| w[1].1 >= w[0].1).count()
    }
}

impl MseDecaySettings {
    pub fn new(seed: u64) -> Self {
        Self {
            budgets: vec![1_000, 10_000, 100_000],
            runs: 20,
            a: 1.0,
            b: 10_000.0,
            gamma: 1.0,
            gamma_term: true,
            n: 200,
            minibatch_size: 10,
            sigma_sq: 10.0,
            seed,
        }
    }

    pub fn from_config(cfg: &RunConfig, seed: u64) -> Result<Self> {
        let d = Self::new(seed);
        Ok(Self {
            runs: cfg.parsed_or("runs", d.runs)?,
            a: cfg.parsed_or("a", d.a)?,
            b: cfg.parsed_or("b", d.b)?,
            gamma: cfg.parsed_or("gamma", d.gamma)?,
            gamma_term: cfg.parsed_or("gamma_term", d.gamma_term)?,
            n: cfg.parsed_or("synthetic_n", d.n)?,
            minibatch_size: cfg.parsed_or("minibatch_size", d.minibatch_size)?,
            sigma_sq: cfg.parsed_or("prior_sigma_sq", d.sigma_sq)?,
            ..d
        })
    }

    pub fn model(&self) -> Result<LogisticRegression> {
        let data = synth_blr(self.n, 2, MSE_DATA_SEED, &MSE_TRUE_THETA)?;
        Ok(LogisticRegression::new(Arc::new(data), PriorConfig::new(self.sigma_sq)?)?)
    }

    pub fn run(&self) -> Result<MseDecayReport> {
        let target = self.model()?;
        let phi = TestFunctional::square(0);
        let truth = grid_truth(&target, &phi)?;
        let schedule = StepSchedule::polynomial(self.a, self.b, self.gamma)?;

        let mut doc = MetricsDocument::new("mse_decay", self.seed);
        doc.echo("schedule", schedule.describe());
        doc.echo("gamma_term", self.gamma_term);
        doc.echo("runs", self.runs);
        doc.echo("target", format!("blr synthetic n={} d=2 data_seed={MSE_DATA_SEED}", self.n));
        doc.echo("minibatch_size", self.minibatch_size);
        doc.echo("prior_sigma_sq", num(self.sigma_sq));
        doc.echo("functional", phi.name());
        doc.echo("estimator", "step-size weighted average");
        doc.echo("burn_in", "T/10");
        doc.push("grid_truth", truth, "");
        let mut curve = Curve::new(&["T", "seed", "estimate", "squared_error"]);
        let mut mse = Vec::new();
        for &t in &self.budgets {
            let mut total = 0.0;
            for seed in run_seeds(self.seed, self.runs) {
                let mut c = SamplerConfig::new(Algorithm::Psgld, schedule, t);
                c.burn_in = t / 10;
                c.minibatch_size = self.minibatch_size;
                c.seed = seed;
                c.gamma_term = self.gamma_term;
                let trace = run_chain(&target, &c)?;
                let est = posterior_average(&trace, &phi, true)?;
                let se = (est - truth) * (est - truth);
                total += se;
                curve.push(vec![t.to_string(), seed.to_string(), num(est), num(se)]);
            }
            let m = total / self.runs as f64;
            doc.push(format!("mse_T{t}"), m, "squared");
            mse.push((t, m));
        }
        let mut output = ExperimentOutput::new(doc);
        output.curves.push(("mse_decay".into(), curve));
        Ok(MseDecayReport { mse, truth, output })
    }
}

/// `E[phi]` by trapezoid quadrature on a box of eight posterior standard
/// deviations, located by a coarse first pass.
pub fn grid_truth(model: &dyn Model, phi: &TestFunctional) -> Result<f64> {
    let wide = vec![(-20.0, 20.0); model.dim()];
    let mut bounds = Vec::new();
    for i in 0..model.dim() {
        let m = grid_expectation(model, &wide, 401, &TestFunctional::coordinate(i))?;
        let sq = grid_expectation(model, &wide, 401, &TestFunctional::square(i))?;
        let sd = (sq - m * m).max(0.0).sqrt();
        bounds.push((m - 8.0 * sd, m + 8.0 * sd));
    }
    Ok(grid_expectation(model, &bounds, 801, phi)?)
}
