//! Named experiments. Each one returns its metrics, plot-ready curves and
//! representative traces; [`ExperimentOutput::write`] puts them on disk as
//! `metrics.json`, `curve_<name>.csv` and `trace_<name>.csv`.

pub mod blr;
pub mod ablations;
pub mod fnn;
pub mod gaussian;

use std::path::Path;
use std::time::Instant;

use psgld_core::SampleTrace;

use crate::data_io::{write_trace_file, RunConfig};
use crate::error::{Error, Result};
use crate::metrics::{Curve, CurveRef, MetricsDocument};

pub const EXPERIMENTS: &[&str] = &[
    "sim2d",
    "blr_australian",
    "blr_a9a",
    "fnn_small",
    "gamma_ablation",
    "thinning",
    "mse_decay",
];

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub metrics: MetricsDocument,
    pub curves: Vec<(String, Curve)>,
    pub traces: Vec<(String, SampleTrace)>,
}

impl ExperimentOutput {
    pub fn new(metrics: MetricsDocument) -> Self {
        Self {
            metrics,
            curves: Vec::new(),
            traces: Vec::new(),
        }
    }

    /// Writes every file into `dir`, creating it if needed.
    pub fn write(&mut self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.metrics.curves.clear();
        for (name, curve) in &self.curves {
            let file = format!("curve_{name}.csv");
            curve.write(&dir.join(&file))?;
            self.metrics.curves.push(CurveRef {
                name: name.clone(),
                file,
            });
        }
        for (name, trace) in &self.traces {
            write_trace_file(trace, &dir.join(format!("trace_{name}.csv")))?;
        }
        self.metrics.write(&dir.join("metrics.json"))
    }
}

/// Runs a named experiment with `overrides` applied to its defaults.
pub fn run_named(name: &str, overrides: &RunConfig, seed: u64) -> Result<ExperimentOutput> {
    let start = Instant::now();
    let mut out = match name {
        "sim2d" => gaussian::Sim2dSettings::from_config(overrides, seed)?.run()?.output,
        "gamma_ablation" => ablations::GammaSettings::from_config(overrides, seed)?.run()?.output,
        "thinning" => ablations::ThinningSettings::from_config(overrides, seed)?.run()?.output,
        "mse_decay" => ablations::MseDecaySettings::from_config(overrides, seed)?.run()?.output,
        "blr_australian" => blr::AustralianSettings::from_config(overrides, seed)?.run()?.output,
        "blr_a9a" => blr::A9aSettings::from_config(overrides, seed)?.run()?.output,
        "fnn_small" => fnn::FnnSettings::from_config(overrides, seed)?.run()?.output,
        other => {
            return Err(Error::config(
                "experiment",
                format!("unknown experiment {other:?}; expected one of {}", EXPERIMENTS.join(", ")),
            ))
        }
    };
    out.metrics.timing.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(out)
}

/// Median; the mean of the two middle values for even lengths.
///
/// # Panics
/// Panics on an empty slice.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Per-run seeds `base, base + 1, …`.
pub fn run_seeds(base: u64, runs: usize) -> impl Iterator<Item = u64> {
    (0..runs as u64).map(move |i| base.wrapping_add(i))
}

/// Euclidean distance between two vectors and the norm of their combined
/// per-coordinate standard errors.
pub fn distance_and_se(a: &[f64], se_a: &[f64], b: &[f64], se_b: &[f64]) -> (f64, f64) {
    let d = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let s = se_a.iter().zip(se_b).map(|(x, y)| x * x + y * y).sum::<f64>().sqrt();
    (d, s)
}

fn eps_list(cfg: &RunConfig, default: &[f64]) -> Result<Vec<f64>> {
    let v = cfg.list("eps")?.unwrap_or_else(|| default.to_vec());
    if v.is_empty() || v.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::config("eps", "step sizes must be positive"));
    }
    Ok(v)
}
