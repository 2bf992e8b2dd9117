//! Dense numeric text: one row per line, fields split on commas or
//! whitespace, label in the last field.

use std::io::BufRead;

use psgld_core::Dataset;

use crate::error::{Error, Result};

/// Parses dense rows. Labels `{0, 1}` are remapped to `{−1, +1}` as in
/// [`super::parse_libsvm`].
pub fn parse_dense(reader: impl BufRead, name: &str) -> Result<Dataset> {
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line_no = lineno + 1;
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let line = line.map_err(|e| err(e.to_string()))?;
        let content = line.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = content
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() < 2 {
            return Err(err("need at least one feature and a label".into()));
        }
        let d = fields.len() - 1;
        match width {
            None => width = Some(d),
            Some(w) if w != d => return Err(err(format!("expected {w} features, found {d}"))),
            _ => {}
        }
        for f in &fields[..d] {
            let v: f64 = f.parse().map_err(|_| err(format!("bad value {f:?}")))?;
            if !v.is_finite() {
                return Err(err(format!("non-finite value {f:?}")));
            }
            values.push(v);
        }
        let l = fields[d];
        let label: f64 = l.parse().map_err(|_| err(format!("bad label {l:?}")))?;
        if label.fract() != 0.0 {
            return Err(err(format!("label {l:?} is not an integer")));
        }
        labels.push(label as i32);
    }
    let Some(cols) = width else {
        return Err(psgld_core::Error::Dataset("no rows".into()).into());
    };
    if labels.iter().all(|l| *l == 0 || *l == 1) && labels.contains(&0) {
        labels.iter_mut().for_each(|l| *l = 2 * *l - 1);
    }
    Ok(Dataset::dense(name, cols, values, labels)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whitespace_and_commas() {
        let d = parse_dense("1 2.5 0\n3,4,1\n".as_bytes(), "d").unwrap();
        assert_eq!(d.cols(), 2);
        assert_eq!(d.labels(), &[-1, 1]);
        assert_eq!(d.row(1).to_dense(2), vec![3.0, 4.0]);
    }

    #[test]
    fn ragged_rows_fail_with_line() {
        let e = parse_dense("1 2 1\n1 1\n".as_bytes(), "d").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        assert!(parse_dense("".as_bytes(), "d").is_err());
    }
}
