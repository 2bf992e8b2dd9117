//! Command line front end.
//!
//! Exit codes: 0 on success, 1 for run-time failures (divergence, missing
//! data, degenerate traces), 2 for configuration errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use psgld_core::diagnostics::{covariance_error, DiagnosticsReport, TestFunctional};
use psgld_core::models::{GaussianTarget, LogisticRegression, MlpModel};
use psgld_core::oracle::{mh_chain, tune_proposal, MhConfig};
use psgld_core::samplers::run_chain_with;
use psgld_core::synth::synth_blr;
use psgld_core::{Algorithm, Dataset, Model, PriorConfig, SamplerConfig};

use crate::data_io::locate::{load_a9a, load_australian, load_dense_file, load_libsvm_file, load_mnist};
use crate::data_io::{read_trace_file, write_trace_file, RunConfig};
use crate::error::{Error, Result};
use crate::experiments::{run_named, EXPERIMENTS};
use crate::metrics::{num, MetricsDocument};

#[derive(Debug, Parser)]
#[command(name = "psgld", version, about = "Preconditioned SGLD sampler, diagnostics and experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one chain described by a config file.
    Sample(SampleArgs),
    /// Summarise a stored trace.
    Diagnose(DiagnoseArgs),
    /// Draw reference samples with random-walk Metropolis-Hastings.
    Oracle(OracleArgs),
    /// Run a named experiment.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// `key=value`, applied after the config file. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub algorithm: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// `theta[i]` or `theta[i]^2`. Repeatable; every coordinate by default.
    #[arg(long = "functional")]
    pub functionals: Vec<String>,
    /// True value of the single requested functional.
    #[arg(long)]
    pub truth: Option<f64>,
    /// True covariance, row-major and comma-separated.
    #[arg(long = "true-cov")]
    pub true_cov: Option<String>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// One of sim2d, blr_australian, blr_a9a, fnn_small, gamma_ablation,
    /// thinning, mse_decay.
    pub name: String,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sample(a) => cmd_sample(&a),
        Command::Diagnose(a) => cmd_diagnose(&a),
        Command::Oracle(a) => cmd_oracle(&a),
        Command::Experiment(a) => cmd_experiment(&a),
    }
}

fn load_config(path: Option<&Path>, common: &Common) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) if !p.is_file() => {
            return Err(Error::config("config", format!("file {} does not exist", p.display())))
        }
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for o in &common.overrides {
        cfg.apply_override(o)?;
    }
    Ok(cfg)
}

fn seed_of(cfg: &RunConfig, common: &Common) -> Result<u64> {
    match common.seed {
        Some(s) => Ok(s),
        None => cfg.parsed_or("seed", 0),
    }
}

/// A model built from a config document.
pub struct Built {
    pub model: Box<dyn Model>,
    pub describe: String,
}

/// Builds the model named by `model` (`gaussian`, `blr` or `mlp`).
pub fn build_model(cfg: &RunConfig, seed: u64) -> Result<Built> {
    let kind = cfg.string_or("model", "gaussian");
    let prior = || -> Result<PriorConfig> {
        PriorConfig::new(cfg.parsed_or("prior_sigma_sq", 1.0)?)
            .map_err(|e| Error::config("prior_sigma_sq", e.to_string()))
    };
    match kind.as_str() {
        "gaussian" => {
            let cov = cfg
                .list("cov")?
                .ok_or_else(|| Error::config("cov", "required for the gaussian model"))?;
            let mean = cfg.list("mean")?.unwrap_or_else(|| vec![0.0; cov.len()]);
            let target = GaussianTarget::new(mean, cov).map_err(|e| Error::config("cov", e.to_string()))?;
            Ok(Built {
                model: Box::new(target),
                describe: "gaussian".into(),
            })
        }
        "blr" => {
            let (data, describe) = blr_data(cfg, seed)?;
            let model = LogisticRegression::new(Arc::new(data), prior()?)?;
            Ok(Built {
                model: Box::new(model),
                describe,
            })
        }
        "mlp" => {
            let (data, describe) = match cfg.string_or("dataset", "mnist").as_str() {
                "mnist" => {
                    let (train, _, source) = load_mnist(cfg.parsed("train_limit")?, Some(1))?;
                    (train, source.describe())
                }
                "file" => file_data(cfg)?,
                other => return Err(Error::config("dataset", format!("{other:?} is not mnist or file"))),
            };
            let hidden = cfg.list("hidden")?.unwrap_or_else(|| vec![100.0]);
            let mut sizes = vec![data.cols()];
            for h in hidden {
                if !(h >= 1.0 && h.fract() == 0.0) {
                    return Err(Error::config("hidden", "layer widths must be positive integers"));
                }
                sizes.push(h as usize);
            }
            let classes = data.labels().iter().map(|&l| l.max(0) as usize + 1).max().unwrap_or(1);
            sizes.push(classes.max(2));
            let model = MlpModel::new(sizes, prior()?, Arc::new(data))?;
            Ok(Built {
                model: Box::new(model),
                describe,
            })
        }
        other => Err(Error::config("model", format!("{other:?} is not gaussian, blr or mlp"))),
    }
}

fn file_data(cfg: &RunConfig) -> Result<(Dataset, String)> {
    let path = cfg
        .path("train_path")
        .ok_or_else(|| Error::config("train_path", "required when dataset = file"))?;
    let data = match cfg.string_or("format", "libsvm").as_str() {
        "libsvm" => load_libsvm_file(&path, cfg.parsed("features")?)?,
        "dense" => load_dense_file(&path)?,
        other => return Err(Error::config("format", format!("{other:?} is not libsvm or dense"))),
    };
    Ok((data, path.display().to_string()))
}

fn blr_data(cfg: &RunConfig, seed: u64) -> Result<(Dataset, String)> {
    match cfg.string_or("dataset", "australian").as_str() {
        "australian" => {
            let (d, s) = load_australian(Some(crate::experiments::blr::AUSTRALIAN_FALLBACK_SEED))?;
            Ok((d, s.describe()))
        }
        "a9a" => {
            let (d, _, s) = load_a9a()?;
            Ok((d, s.describe()))
        }
        "synthetic" => {
            let n = cfg.parsed_or("synthetic_n", 500)?;
            let dim = cfg.parsed_or("synthetic_d", 2)?;
            let truth: Vec<f64> = (0..dim).map(|i| if i % 2 == 0 { 1.0 } else { -0.5 }).collect();
            let d = synth_blr(n, dim, seed, &truth).map_err(|e| Error::config("synthetic_n", e.to_string()))?;
            Ok((d, format!("synthetic:blr(n={n},d={dim},seed={seed})")))
        }
        "file" => file_data(cfg),
        other => Err(Error::config(
            "dataset",
            format!("{other:?} is not australian, a9a, synthetic or file"),
        )),
    }
}

fn cmd_sample(args: &SampleArgs) -> Result<()> {
    let mut cfg = load_config(Some(&args.config), &args.common)?;
    if let Some(a) = &args.algorithm {
        cfg.set("algorithm", a)?;
    }
    let seed = seed_of(&cfg, &args.common)?;
    cfg.set("seed", &seed.to_string())?;
    let built = build_model(&cfg, seed)?;
    let model = built.model.as_ref();

    let total_iters = cfg.required("total_iters")?;
    let batch: usize = cfg.parsed_or("minibatch_size", model.data_len().min(100))?;
    let schedule = cfg.schedule(model.data_len().div_ceil(batch.max(1)))?;
    let algorithm = match cfg.get("algorithm") {
        Some(a) => a.parse::<Algorithm>().map_err(|e| Error::config("algorithm", e.to_string()))?,
        None => Algorithm::Psgld,
    };
    let mut base = SamplerConfig::new(algorithm, schedule, total_iters);
    base.minibatch_size = batch;
    let config = cfg.sampler_config(&base, model.data_len())?;
    config.validate_for(model).map_err(|e| match e {
        psgld_core::Error::InvalidParameter { name, reason } => Error::config(name, reason),
        other => other.into(),
    })?;

    let start = Instant::now();
    let mut final_eps = f64::NAN;
    let trace = run_chain_with(model, &config, None, |ev| final_eps = ev.eps)?;
    let secs = start.elapsed().as_secs_f64();

    let mut doc = MetricsDocument::new("sample", seed);
    for (k, v) in cfg.entries() {
        doc.echo(k.clone(), v);
    }
    doc.echo("data", &built.describe);
    doc.echo("schedule_label", trace.schedule());
    doc.push("final_step_size", final_eps, "effective eps");
    doc.push("divergence_checks_passed", config.total_iters as f64, "iterations");
    doc.push("samples", trace.len() as f64, "samples");
    doc.push("sum_eps", trace.sum_eps(), "effective eps");
    doc.timing.wall_clock_seconds = secs;
    doc.timing.iterations_per_second = Some(config.total_iters as f64 / secs.max(1e-9));
    std::fs::create_dir_all(&args.common.out).map_err(|e| Error::io(&args.common.out, e))?;
    write_trace_file(&trace, &args.common.out.join(format!("trace_{}.csv", algorithm.name())))?;
    doc.write(&args.common.out.join("metrics.json"))
}

/// Parses `theta[i]` or `theta[i]^2`.
pub fn parse_functional(spec: &str, dim: usize) -> Result<TestFunctional> {
    let bad = || Error::config("functional", format!("{spec:?} is not theta[i] or theta[i]^2"));
    let s = spec.trim();
    let (body, square) = match s.strip_suffix("^2") {
        Some(b) => (b, true),
        None => (s, false),
    };
    let idx: usize = body
        .strip_prefix("theta[")
        .and_then(|b| b.strip_suffix(']'))
        .and_then(|i| i.trim().parse().ok())
        .ok_or_else(bad)?;
    if idx >= dim {
        return Err(Error::config(
            "functional",
            format!("{spec:?} indexes past the trace dimension {dim}"),
        ));
    }
    Ok(if square {
        TestFunctional::square(idx)
    } else {
        TestFunctional::coordinate(idx)
    })
}

fn cmd_diagnose(args: &DiagnoseArgs) -> Result<()> {
    let trace = read_trace_file(&args.trace)?;
    let specs: Vec<String> = if args.functionals.is_empty() {
        (0..trace.dim()).map(|i| format!("theta[{i}]")).collect()
    } else {
        args.functionals.clone()
    };
    if args.truth.is_some() && specs.len() != 1 {
        return Err(Error::config("truth", "needs exactly one --functional"));
    }
    let mut doc = MetricsDocument::new("diagnose", trace.seed());
    doc.echo("trace", args.trace.display());
    doc.echo("algorithm", trace.algorithm());
    doc.echo("schedule", trace.schedule());
    doc.push("samples", trace.len() as f64, "samples");
    for spec in &specs {
        let phi = parse_functional(spec, trace.dim())?;
        let r = DiagnosticsReport::compute(&trace, &phi, args.truth)?;
        doc.push(format!("act_{spec}"), r.tau, "iterations");
        doc.push(format!("ess_{spec}"), r.ess, "samples");
        doc.push(format!("phi_hat_{spec}"), r.phi_hat, "");
        doc.push(format!("phi_hat_weighted_{spec}"), r.phi_hat_weighted, "");
        if let Some(risk) = r.risk {
            doc.push(format!("risk_{spec}"), risk, "squared error");
        }
    }
    if let Some(cov) = &args.true_cov {
        let values = cov
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::config("true-cov", e.to_string()))?;
        if values.len() != trace.dim() * trace.dim() {
            return Err(Error::config(
                "true-cov",
                format!("expected {} entries, found {}", trace.dim() * trace.dim(), values.len()),
            ));
        }
        doc.push("covariance_error_frobenius", covariance_error(&trace, &values)?, "");
    }
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    doc.write(&args.out.join("metrics.json"))
}

fn cmd_oracle(args: &OracleArgs) -> Result<()> {
    let cfg = load_config(Some(&args.config), &args.common)?;
    let seed = seed_of(&cfg, &args.common)?;
    let built = build_model(&cfg, seed)?;
    let model = built.model.as_ref();
    let steps: usize = cfg.parsed_or("mh_steps", 100_000)?;
    let base = MhConfig {
        thinning: cfg.parsed_or("thinning", 1)?,
        ..MhConfig::new(0.1, steps, cfg.parsed_or("burn_in", steps / 10)?, seed)
    };
    base.validate(model.dim()).map_err(|e| match e {
        psgld_core::Error::InvalidParameter { name, reason } => Error::config(name, reason),
        other => other.into(),
    })?;
    let start = Instant::now();
    let tuned = tune_proposal(model, &base, None, 2_000, true)?;
    let run = mh_chain(model, &tuned.config, Some(tuned.warm_start))?;
    let mean = psgld_core::diagnostics::posterior_mean(&run.trace)?;

    let mut doc = MetricsDocument::new("oracle", seed);
    for (k, v) in cfg.entries() {
        doc.echo(k.clone(), v);
    }
    doc.echo("data", &built.describe);
    doc.echo("proposal_std", num(tuned.config.proposal_std));
    doc.push("acceptance_rate", run.acceptance_rate, "fraction");
    doc.push("pilot_acceptance_rate", tuned.pilot_acceptance, "fraction");
    doc.push("samples", run.trace.len() as f64, "samples");
    for (i, m) in mean.iter().enumerate() {
        doc.push(format!("posterior_mean_theta[{i}]"), *m, "");
    }
    doc.timing.wall_clock_seconds = start.elapsed().as_secs_f64();
    std::fs::create_dir_all(&args.common.out).map_err(|e| Error::io(&args.common.out, e))?;
    write_trace_file(&run.trace, &args.common.out.join("trace_mh.csv"))?;
    doc.write(&args.common.out.join("metrics.json"))
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<()> {
    if !EXPERIMENTS.contains(&args.name.as_str()) {
        return Err(Error::config(
            "experiment",
            format!("unknown experiment {:?}; expected one of {}", args.name, EXPERIMENTS.join(", ")),
        ));
    }
    let cfg = load_config(args.config.as_deref(), &args.common)?;
    let seed = seed_of(&cfg, &args.common)?;
    let mut out = run_named(&args.name, &cfg, seed)?;
    out.write(&args.common.out)
}
