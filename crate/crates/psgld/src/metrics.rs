//! JSON metrics documents.
//!
//! Everything except the `timing` object is a deterministic function of the
//! configuration and seed.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub units: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRef {
    pub name: String,
    pub file: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_clock_seconds: f64,
    pub iterations_per_second: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsDocument {
    pub schema_version: u32,
    pub experiment: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub metrics: Vec<Metric>,
    pub curves: Vec<CurveRef>,
    /// Free-text remarks such as dataset substitutions or failed checks.
    pub notes: Vec<String>,
    pub timing: Timing,
}

impl MetricsDocument {
    pub fn new(experiment: impl Into<String>, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.into(),
            seed,
            config: BTreeMap::new(),
            metrics: Vec::new(),
            curves: Vec::new(),
            notes: Vec::new(),
            timing: Timing::default(),
        }
    }

    pub fn echo(&mut self, key: impl Into<String>, value: impl ToString) {
        self.config.insert(key.into(), value.to_string());
    }

    pub fn push(&mut self, name: impl Into<String>, value: f64, units: impl Into<String>) {
        self.metrics.push(Metric {
            name: name.into(),
            value,
            units: units.into(),
        });
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.name == name).map(|m| m.value)
    }

    /// Schema version present and every number finite.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "metrics: schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if let Some(m) = self.metrics.iter().find(|m| !m.value.is_finite()) {
            return Err(Error::Format(format!("metrics: {} is not finite", m.name)));
        }
        let t = &self.timing;
        if !t.wall_clock_seconds.is_finite() || t.iterations_per_second.is_some_and(|v| !v.is_finite()) {
            return Err(Error::Format("metrics: timing is not finite".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// JSON with the timing object zeroed, for reproducibility comparisons.
    pub fn to_json_without_timing(&self) -> Result<String> {
        let mut d = self.clone();
        d.timing = Timing::default();
        d.to_json()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let d: Self = serde_json::from_str(&text)?;
        d.validate()?;
        Ok(d)
    }
}

/// Plot-ready table written as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Curve {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// # Panics
    /// Panics if the row width differs from the column count.
    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "curve row width");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Shortest round-trip text for a number.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}
