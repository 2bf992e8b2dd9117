//! Flat `key = value` run configuration.
//!
//! One assignment per line; `#` starts a comment; string values may be
//! double-quoted. Unknown keys are rejected, and every path key must name an
//! existing file when the document is loaded.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use psgld_core::{Algorithm, SamplerConfig, StepSchedule, StepUnits};

use crate::error::{Error, Result};

/// Accepted keys.
pub const CONFIG_KEYS: &[&str] = &[
    "model",
    "dataset",
    "train_path",
    "test_path",
    "format",
    "features",
    "mean",
    "cov",
    "prior_sigma_sq",
    "hidden",
    "train_limit",
    "test_limit",
    "synthetic_n",
    "synthetic_d",
    "algorithm",
    "schedule",
    "eps",
    "a",
    "b",
    "gamma",
    "decay_epochs",
    "epoch_len",
    "step_units",
    "burn_in",
    "thinning",
    "total_iters",
    "minibatch_size",
    "seed",
    "gamma_term",
    "alpha",
    "lambda",
    "out_dir",
    "runs",
    "mh_steps",
];

const PATH_KEYS: &[&str] = &["train_path", "test_path"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("expected key = value, got {line:?}"),
            })?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.check_paths()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Sets one key. Surrounding double quotes are removed from the value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !CONFIG_KEYS.contains(&key) {
            return Err(Error::config(key, "unknown key"));
        }
        let v = value
            .strip_prefix('"')
            .and_then(|s| s.strip_suffix('"'))
            .unwrap_or(value);
        self.values.insert(key.to_string(), v.to_string());
        Ok(())
    }

    /// Applies `key=value`.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::config(assignment, "override must look like key=value"))?;
        self.set(k.trim(), v.trim())?;
        if PATH_KEYS.contains(&k.trim()) {
            self.check_paths()?;
        }
        Ok(())
    }

    pub fn check_paths(&self) -> Result<()> {
        for key in PATH_KEYS {
            if let Some(p) = self.values.get(*key) {
                if !Path::new(p).is_file() {
                    return Err(Error::config(*key, format!("file {p:?} does not exist")));
                }
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn string_or(&self, key: &str, default: &str) -> String {
        self.get(key).unwrap_or(default).to_string()
    }

    /// Typed value of `key`, if present.
    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| Error::config(key, format!("{v:?}: {e}"))))
            .transpose()
    }

    pub fn parsed_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn required<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.parsed(key)?
            .ok_or_else(|| Error::config(key, "required but missing"))
    }

    /// Comma-separated list of numbers.
    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<f64>()
                            .map_err(|e| Error::config(key, format!("{x:?}: {e}")))
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(PathBuf::from)
    }

    /// Step-size schedule from `schedule` and its parameters.
    ///
    /// `epoch_len` defaults to `iters_per_epoch`.
    pub fn schedule(&self, iters_per_epoch: usize) -> Result<StepSchedule> {
        let kind = self.string_or("schedule", "constant");
        let s = match kind.as_str() {
            "constant" => StepSchedule::constant(self.required("eps")?),
            "polynomial" => StepSchedule::polynomial(
                self.required("a")?,
                self.parsed_or("b", 0.0)?,
                self.parsed_or("gamma", 1.0)?,
            ),
            "block_decay" => StepSchedule::block_decay(
                self.required("eps")?,
                self.required("decay_epochs")?,
                self.parsed_or("epoch_len", iters_per_epoch.max(1))?,
            ),
            other => {
                return Err(Error::config(
                    "schedule",
                    format!("{other:?} is not constant, polynomial or block_decay"),
                ))
            }
        };
        s.map_err(|e| Error::config("schedule", e.to_string()))
    }

    /// Sampler settings. `defaults` supplies every key the document leaves out.
    pub fn sampler_config(&self, defaults: &SamplerConfig, data_len: usize) -> Result<SamplerConfig> {
        let mut c = defaults.clone();
        if let Some(a) = self.get("algorithm") {
            c.algorithm = a
                .parse::<Algorithm>()
                .map_err(|e| Error::config("algorithm", e.to_string()))?;
        }
        c.minibatch_size = self.parsed_or("minibatch_size", c.minibatch_size)?;
        if self.contains("schedule") || self.contains("eps") || self.contains("a") {
            c.schedule = self.schedule(data_len.div_ceil(c.minibatch_size.max(1)))?;
        }
        if let Some(u) = self.get("step_units") {
            c.step_units = u
                .parse::<StepUnits>()
                .map_err(|e| Error::config("step_units", e.to_string()))?;
        }
        c.burn_in = self.parsed_or("burn_in", c.burn_in)?;
        c.thinning = self.parsed_or("thinning", c.thinning)?;
        c.total_iters = self.parsed_or("total_iters", c.total_iters)?;
        c.seed = self.parsed_or("seed", c.seed)?;
        c.gamma_term = self.parsed_or("gamma_term", c.gamma_term)?;
        c.alpha = self.parsed_or("alpha", c.alpha)?;
        c.lambda = self.parsed_or("lambda", c.lambda)?;
        c.validate().map_err(|e| match e {
            psgld_core::Error::InvalidParameter { name, reason } => Error::config(name, reason),
            other => Error::from(other),
        })?;
        Ok(c)
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}
