//! LIBSVM sparse text: `<label> <index>:<value> ...` with 1-based, strictly
//! increasing indices.

use std::io::{BufRead, Write};

use psgld_core::Dataset;

use crate::error::{Error, Result};

/// Parses a LIBSVM stream.
///
/// The column count is the largest index seen unless `cols` pins it. If the
/// labels are a subset of `{0, 1}` and contain a 0, they are remapped to
/// `{−1, +1}`.
pub fn parse_libsvm(reader: impl BufRead, name: &str, cols: Option<usize>) -> Result<Dataset> {
    let mut indptr = vec![0usize];
    let mut indices: Vec<u32> = Vec::new();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut max_index = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let line_no = lineno + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().expect("nonempty line has a token");
        let label = parse_label(label_tok).ok_or_else(|| err(format!("bad label {label_tok:?}")))?;

        let mut prev = 0usize;
        for tok in tokens {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("expected index:value, got {tok:?}")))?;
            let idx: usize = i.parse().map_err(|_| err(format!("bad index {i:?}")))?;
            let val: f64 = v.parse().map_err(|_| err(format!("bad value {v:?}")))?;
            if idx == 0 {
                return Err(err("indices are 1-based; found 0".into()));
            }
            if idx <= prev {
                return Err(err(format!("index {idx} does not increase after {prev}")));
            }
            if !val.is_finite() {
                return Err(err(format!("non-finite value at index {idx}")));
            }
            prev = idx;
            let col = u32::try_from(idx - 1).map_err(|_| err(format!("index {idx} too large")))?;
            indices.push(col);
            values.push(val);
        }
        max_index = max_index.max(prev);
        labels.push(label);
        indptr.push(indices.len());
    }

    if labels.is_empty() {
        return Err(psgld_core::Error::Dataset("no rows".into()).into());
    }
    let cols = match cols {
        Some(c) if c < max_index => {
            return Err(Error::Format(format!(
                "{name}: feature index {max_index} exceeds the pinned width {c}"
            )))
        }
        Some(c) => c,
        None => max_index.max(1),
    };
    if labels.iter().all(|l| *l == 0 || *l == 1) && labels.contains(&0) {
        labels.iter_mut().for_each(|l| *l = 2 * *l - 1);
    }
    Ok(Dataset::sparse(name, cols, indptr, indices, values, labels)?)
}

fn parse_label(tok: &str) -> Option<i32> {
    if let Ok(v) = tok.parse::<i32>() {
        return Some(v);
    }
    let f: f64 = tok.parse().ok()?;
    (f.fract() == 0.0 && f.abs() < 1e9).then_some(f as i32)
}

/// Writes a dataset in LIBSVM form. Dense rows are written with their
/// nonzero entries only.
pub fn write_libsvm(data: &Dataset, mut out: impl Write) -> std::io::Result<()> {
    for i in 0..data.len() {
        write!(out, "{}", data.label(i))?;
        for (c, v) in data.row(i).nonzeros() {
            write!(out, " {}:{:?}", c + 1, v)?;
        }
        writeln!(out)?;
    }
    Ok(())
}
