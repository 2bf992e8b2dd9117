//! Trace files: one JSON header line, then one CSV row per sample holding
//! `eps` followed by the parameter values.
//!
//! Numbers are written in Rust's shortest round-trip notation, so reading a
//! file back reproduces every bit.

use std::io::{BufRead, Write};

use psgld_core::{ParamVector, SampleTrace, TraceMeta};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRACE_FORMAT: &str = "psgld-trace";
pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    algorithm: String,
    dim: usize,
    samples: usize,
    sum_eps: f64,
    total_iters: usize,
    burn_in: usize,
    thinning: usize,
    seed: u64,
    schedule: String,
}

pub fn write_trace(trace: &SampleTrace, mut out: impl Write) -> Result<()> {
    let meta = trace.meta();
    let header = Header {
        format: TRACE_FORMAT.into(),
        version: TRACE_VERSION,
        algorithm: meta.algorithm,
        dim: meta.dim,
        samples: trace.len(),
        sum_eps: trace.sum_eps(),
        total_iters: meta.total_iters,
        burn_in: meta.burn_in,
        thinning: meta.thinning,
        seed: meta.seed,
        schedule: meta.schedule,
    };
    let io = |e| Error::Format(format!("writing trace: {e}"));
    serde_json::to_writer(&mut out, &header)?;
    writeln!(out).map_err(io)?;
    let mut line = String::new();
    for (theta, eps) in trace.samples() {
        line.clear();
        line.push_str(&format!("{eps:?}"));
        for v in theta.iter() {
            line.push(',');
            line.push_str(&format!("{v:?}"));
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_trace(reader: impl BufRead) -> Result<SampleTrace> {
    let mut lines = reader.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Format("trace: empty file".into()))?
        .map_err(|e| Error::Format(format!("trace: {e}")))?;
    let header: Header = serde_json::from_str(&first)?;
    if header.format != TRACE_FORMAT {
        return Err(Error::Format(format!("trace: unknown format {:?}", header.format)));
    }
    if header.version != TRACE_VERSION {
        return Err(Error::Format(format!(
            "trace: version {} is not supported (expected {TRACE_VERSION})",
            header.version
        )));
    }
    let mut samples = Vec::with_capacity(header.samples);
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let line = line.map_err(|e| err(e.to_string()))?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',').map(|f| f.parse::<f64>().map_err(|_| err(format!("bad number {f:?}"))));
        let eps = fields.next().expect("split yields at least one field")?;
        let theta: Vec<f64> = fields.collect::<Result<_>>()?;
        if theta.len() != header.dim {
            return Err(err(format!("expected {} parameters, found {}", header.dim, theta.len())));
        }
        samples.push((ParamVector::from(theta), eps));
    }
    if samples.len() != header.samples {
        return Err(Error::Format(format!(
            "trace: header declares {} samples but the file holds {} (truncated?)",
            header.samples,
            samples.len()
        )));
    }
    let meta = TraceMeta {
        algorithm: header.algorithm,
        dim: header.dim,
        total_iters: header.total_iters,
        burn_in: header.burn_in,
        thinning: header.thinning,
        seed: header.seed,
        schedule: header.schedule,
    };
    Ok(SampleTrace::from_parts(meta, samples, header.sum_eps)?)
}
