//! Reference posteriors: random-walk Metropolis–Hastings on the full-data
//! posterior and trapezoid quadrature for one or two dimensions.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::diagnostics::TestFunctional;
use crate::error::{Error, Result};
use crate::model_api::{Model, ParamVector};
use crate::rng::{ChainRng, NoiseSource};
use crate::trace::{SampleTrace, TraceMeta};

/// Consecutive rejections after which a chain is declared stuck.
pub const MAX_CONSECUTIVE_REJECTIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct MhConfig {
    /// Gaussian proposal standard deviation, multiplied per coordinate by
    /// `proposal_scale` when present.
    pub proposal_std: f64,
    pub proposal_scale: Option<Vec<f64>>,
    pub steps: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub seed: u64,
}

impl MhConfig {
    pub fn new(proposal_std: f64, steps: usize, burn_in: usize, seed: u64) -> Self {
        Self {
            proposal_std,
            proposal_scale: None,
            steps,
            burn_in,
            thinning: 1,
            seed,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.proposal_std > 0.0 && self.proposal_std.is_finite()) {
            return Err(Error::invalid("proposal_std", "must be positive"));
        }
        if let Some(s) = &self.proposal_scale {
            if s.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.len(),
                });
            }
            if s.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::invalid("proposal_scale", "entries must be positive"));
            }
        }
        if self.steps == 0 || self.burn_in >= self.steps {
            return Err(Error::invalid("burn_in", "must be smaller than steps"));
        }
        if self.thinning == 0 {
            return Err(Error::invalid("thinning", "must be at least 1"));
        }
        Ok(())
    }

    fn step_scale(&self, i: usize) -> f64 {
        self.proposal_std * self.proposal_scale.as_ref().map_or(1.0, |s| s[i])
    }
}

#[derive(Debug, Clone)]
pub struct MhRun {
    /// Post-burn-in states, each with weight 1.
    pub trace: SampleTrace,
    /// Accepted proposals over all steps, burn-in included.
    pub acceptance_rate: f64,
}

/// Random-walk Metropolis–Hastings from `init`, or from the model's random
/// initialisation.
pub fn mh_chain(model: &dyn Model, config: &MhConfig, init: Option<ParamVector>) -> Result<MhRun> {
    let dim = model.dim();
    config.validate(dim)?;
    let mut rng = ChainRng::stream(config.seed, 0);
    let mut theta = match init {
        Some(t) => {
            model.check_dim(&t)?;
            t
        }
        None => model.init_theta(&mut rng),
    };
    let mut logp = model.log_posterior(&theta)?;
    if !logp.is_finite() {
        return Err(Error::invalid("init", "log posterior is not finite at the start"));
    }
    let mut trace = SampleTrace::empty(TraceMeta {
        algorithm: String::from("mh"),
        dim,
        total_iters: config.steps,
        burn_in: config.burn_in,
        thinning: config.thinning,
        seed: config.seed,
        schedule: format!("rw-mh(proposal_std={:e})", config.proposal_std),
    });
    let mut proposal = theta.clone();
    let mut accepted = 0usize;
    let mut run = 0usize;
    for t in 1..=config.steps {
        for (i, (p, x)) in proposal.iter_mut().zip(theta.iter()).enumerate() {
            *p = x + config.step_scale(i) * rng.standard_normal();
        }
        let logq = model.log_posterior(&proposal)?;
        let u = rng.uniform();
        if logq.is_finite() && libm::log(u) < logq - logp {
            theta.copy_from_slice(&proposal);
            logp = logq;
            accepted += 1;
            run = 0;
        } else {
            run += 1;
            if run >= MAX_CONSECUTIVE_REJECTIONS {
                return Err(Error::ZeroAcceptance(run));
            }
        }
        if t > config.burn_in {
            trace.add_eps(1.0);
            if (t - config.burn_in).is_multiple_of(config.thinning) {
                trace.push(theta.clone(), 1.0);
            }
        }
    }
    Ok(MhRun {
        trace,
        acceptance_rate: accepted as f64 / config.steps as f64,
    })
}

/// Target acceptance band for pilot tuning.
pub const TARGET_ACCEPTANCE: (f64, f64) = (0.25, 0.40);

#[derive(Debug, Clone)]
pub struct TunedProposal {
    pub config: MhConfig,
    pub pilot_acceptance: f64,
    /// End state of the last pilot run, a warm start for the main chain.
    pub warm_start: ParamVector,
}

/// Pilot runs of `pilot_steps` that rescale `proposal_std` until the
/// acceptance rate lands in [`TARGET_ACCEPTANCE`].
///
/// With `adapt_scale`, one extra pilot sets `proposal_scale` to the
/// per-coordinate sample standard deviations before the final rescaling.
pub fn tune_proposal(
    model: &dyn Model,
    base: &MhConfig,
    init: Option<ParamVector>,
    pilot_steps: usize,
    adapt_scale: bool,
) -> Result<TunedProposal> {
    let mut cfg = base.clone();
    cfg.steps = pilot_steps;
    cfg.burn_in = 0;
    cfg.thinning = 1;
    let mut start = init;
    let mut rate = 0.0;
    let mut seed = base.seed;
    let mut adapted = !adapt_scale;
    for _round in 0..60 {
        cfg.seed = seed;
        seed = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let run = match mh_chain(model, &cfg, start.clone()) {
            Ok(r) => r,
            Err(Error::ZeroAcceptance(_)) => {
                cfg.proposal_std *= 0.1;
                continue;
            }
            Err(e) => return Err(e),
        };
        rate = run.acceptance_rate;
        start = run.trace.samples().last().map(|s| s.0.clone());
        let in_band = (TARGET_ACCEPTANCE.0..=TARGET_ACCEPTANCE.1).contains(&rate);
        if in_band && !adapted {
            let sd: Vec<f64> = (0..model.dim())
                .map(|i| {
                    let c = run.trace.coordinate(i);
                    let m = c.iter().sum::<f64>() / c.len() as f64;
                    libm::sqrt(c.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / c.len() as f64)
                })
                .collect();
            if sd.iter().all(|s| *s > 0.0 && s.is_finite()) {
                let total = libm::sqrt(sd.iter().map(|s| s * s).sum::<f64>() / sd.len() as f64);
                cfg.proposal_std *= total;
                cfg.proposal_scale = Some(sd.iter().map(|s| s / total).collect());
            }
            adapted = true;
            continue;
        }
        if in_band {
            let mut config = base.clone();
            config.proposal_std = cfg.proposal_std;
            config.proposal_scale = cfg.proposal_scale.clone();
            return Ok(TunedProposal {
                config,
                pilot_acceptance: rate,
                warm_start: start.expect("pilot recorded samples"),
            });
        }
        let factor = if rate <= 0.0 { 0.1 } else { (rate / 0.3).clamp(0.2, 5.0) };
        cfg.proposal_std *= factor;
    }
    Err(Error::invalid(
        "proposal_std",
        format!("pilot tuning did not reach the target band (last rate {rate:.3})"),
    ))
}

/// `∫φ·p / ∫p` by the trapezoid rule on a regular grid over `bounds`, with
/// `resolution` points per axis. Needs `D ∈ {1, 2}`.
///
/// The bounds should cover at least six posterior standard deviations; this
/// is not checked.
pub fn grid_expectation(
    model: &dyn Model,
    bounds: &[(f64, f64)],
    resolution: usize,
    phi: &TestFunctional,
) -> Result<f64> {
    let dim = model.dim();
    if dim > 2 {
        return Err(Error::invalid("dimension", "grid quadrature supports at most 2 dimensions"));
    }
    if bounds.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bounds.len(),
        });
    }
    if resolution < 2 {
        return Err(Error::invalid("resolution", "need at least 2 points per axis"));
    }
    if bounds.iter().any(|(lo, hi)| !(lo < hi && lo.is_finite() && hi.is_finite())) {
        return Err(Error::invalid("bounds", "need finite lo < hi"));
    }
    let axes: Vec<Vec<f64>> = bounds
        .iter()
        .map(|&(lo, hi)| {
            let h = (hi - lo) / (resolution - 1) as f64;
            (0..resolution).map(|k| lo + h * k as f64).collect()
        })
        .collect();
    let weight = |k: usize| if k == 0 || k == resolution - 1 { 0.5 } else { 1.0 };
    let cells = if dim == 2 { resolution * resolution } else { resolution };

    let mut logs = Vec::with_capacity(cells);
    let mut point = vec![0.0; dim];
    for c in 0..cells {
        for (d, p) in point.iter_mut().enumerate() {
            *p = axes[d][if d == 0 { c % resolution } else { c / resolution }];
        }
        let l = model.log_posterior(&point)?;
        if l.is_nan() || l == f64::INFINITY {
            return Err(Error::NonFinite);
        }
        logs.push(l);
    }
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::NonFinite);
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (c, l) in logs.iter().enumerate() {
        let mut w = libm::exp(l - max);
        for (d, p) in point.iter_mut().enumerate() {
            let k = if d == 0 { c % resolution } else { c / resolution };
            w *= weight(k);
            *p = axes[d][k];
        }
        num += w * phi.eval(&point);
        den += w;
    }
    let r = num / den;
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Error::NonFinite)
    }
}
