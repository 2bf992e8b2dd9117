//! In-memory labelled datasets with dense or CSR-sparse feature storage.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Features {
    /// Row-major `rows × cols`.
    Dense { cols: usize, values: Vec<f64> },
    /// Compressed sparse rows, 0-based column indices strictly increasing per row.
    Sparse {
        cols: usize,
        indptr: Vec<usize>,
        indices: Vec<u32>,
        values: Vec<f64>,
    },
}

/// A borrowed feature row.
#[derive(Debug, Clone, Copy)]
pub enum Row<'a> {
    Dense(&'a [f64]),
    Sparse {
        indices: &'a [u32],
        values: &'a [f64],
    },
}

impl<'a> Row<'a> {
    pub fn dot(&self, w: &[f64]) -> f64 {
        match *self {
            Row::Dense(x) => x.iter().zip(w).map(|(a, b)| a * b).sum(),
            Row::Sparse { indices, values } => indices
                .iter()
                .zip(values)
                .map(|(&j, v)| v * w[j as usize])
                .sum(),
        }
    }

    /// `out += alpha * x`.
    pub fn axpy(&self, alpha: f64, out: &mut [f64]) {
        match *self {
            Row::Dense(x) => out.iter_mut().zip(x).for_each(|(o, v)| *o += alpha * v),
            Row::Sparse { indices, values } => {
                for (&j, v) in indices.iter().zip(values) {
                    out[j as usize] += alpha * v;
                }
            }
        }
    }

    /// Nonzero entries as `(column, value)`; dense rows skip exact zeros.
    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        let (dense, sparse) = match *self {
            Row::Dense(x) => (Some(x), None),
            Row::Sparse { indices, values } => (None, Some((indices, values))),
        };
        let d = dense
            .into_iter()
            .flat_map(|x| x.iter().copied().enumerate())
            .filter(|&(_, v)| v != 0.0);
        let s = sparse
            .into_iter()
            .flat_map(|(i, v)| i.iter().map(|&j| j as usize).zip(v.iter().copied()));
        d.chain(s)
    }

    pub fn to_dense(&self, cols: usize) -> Vec<f64> {
        let mut out = alloc::vec![0.0; cols];
        self.axpy(1.0, &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: Features,
    labels: Vec<i32>,
}

impl Dataset {
    pub fn dense(
        name: impl Into<String>,
        cols: usize,
        values: Vec<f64>,
        labels: Vec<i32>,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Dataset("no rows".into()));
        }
        if values.len() != cols * labels.len() {
            return Err(Error::DimensionMismatch {
                expected: cols * labels.len(),
                found: values.len(),
            });
        }
        Ok(Self {
            name: name.into(),
            features: Features::Dense { cols, values },
            labels,
        })
    }

    pub fn sparse(
        name: impl Into<String>,
        cols: usize,
        indptr: Vec<usize>,
        indices: Vec<u32>,
        values: Vec<f64>,
        labels: Vec<i32>,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Dataset("no rows".into()));
        }
        if indptr.len() != labels.len() + 1 || indptr[0] != 0 {
            return Err(Error::Dataset("row pointer does not match label count".into()));
        }
        if indices.len() != values.len() || *indptr.last().unwrap() != indices.len() {
            return Err(Error::Dataset("index/value arrays disagree".into()));
        }
        for r in 0..labels.len() {
            let row = &indices[indptr[r]..indptr[r + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Dataset(alloc::format!(
                    "row {r}: column indices not strictly increasing"
                )));
            }
            if let Some(&last) = row.last() {
                if last as usize >= cols {
                    return Err(Error::Dataset(alloc::format!(
                        "row {r}: column {last} >= {cols}"
                    )));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            features: Features::Sparse {
                cols,
                indptr,
                indices,
                values,
            },
            labels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn cols(&self) -> usize {
        match &self.features {
            Features::Dense { cols, .. } | Features::Sparse { cols, .. } => *cols,
        }
    }

    pub fn features(&self) -> &Features {
        &self.features
    }

    pub fn labels(&self) -> &[i32] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> i32 {
        self.labels[i]
    }

    pub fn row(&self, i: usize) -> Row<'_> {
        match &self.features {
            Features::Dense { cols, values } => Row::Dense(&values[i * cols..(i + 1) * cols]),
            Features::Sparse {
                indptr,
                indices,
                values,
                ..
            } => {
                let (a, b) = (indptr[i], indptr[i + 1]);
                Row::Sparse {
                    indices: &indices[a..b],
                    values: &values[a..b],
                }
            }
        }
    }

    /// New dataset containing the given rows, in order.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.len()) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: self.len(),
            });
        }
        let labels: Vec<i32> = rows.iter().map(|&r| self.labels[r]).collect();
        match &self.features {
            Features::Dense { cols, values } => {
                let mut out = Vec::with_capacity(rows.len() * cols);
                for &r in rows {
                    out.extend_from_slice(&values[r * cols..(r + 1) * cols]);
                }
                Self::dense(self.name.clone(), *cols, out, labels)
            }
            Features::Sparse {
                cols,
                indptr,
                indices,
                values,
            } => {
                let mut p = Vec::with_capacity(rows.len() + 1);
                let (mut ix, mut vs) = (Vec::new(), Vec::new());
                p.push(0);
                for &r in rows {
                    ix.extend_from_slice(&indices[indptr[r]..indptr[r + 1]]);
                    vs.extend_from_slice(&values[indptr[r]..indptr[r + 1]]);
                    p.push(ix.len());
                }
                Self::sparse(self.name.clone(), *cols, p, ix, vs, labels)
            }
        }
    }

    /// Per-column mean and standard deviation (population normalization).
    pub fn column_moments(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.cols();
        let n = self.len() as f64;
        let mut mean = alloc::vec![0.0; d];
        for i in 0..self.len() {
            self.row(i).axpy(1.0 / n, &mut mean);
        }
        let mut var = alloc::vec![0.0; d];
        for i in 0..self.len() {
            let x = self.row(i).to_dense(d);
            for j in 0..d {
                let c = x[j] - mean[j];
                var[j] += c * c / n;
            }
        }
        (mean, var.into_iter().map(libm::sqrt).collect())
    }

    /// Dense copy with columns shifted and scaled by the given moments.
    /// Columns with zero spread are only centred.
    pub fn standardized_with(&self, mean: &[f64], std: &[f64]) -> Result<Self> {
        let d = self.cols();
        if mean.len() != d || std.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: mean.len().min(std.len()),
            });
        }
        let mut values = Vec::with_capacity(self.len() * d);
        for i in 0..self.len() {
            let x = self.row(i).to_dense(d);
            values.extend(x.iter().enumerate().map(|(j, &v)| {
                let c = v - mean[j];
                if std[j] > 0.0 {
                    c / std[j]
                } else {
                    c
                }
            }));
        }
        Self::dense(self.name.clone(), d, values, self.labels.clone())
    }

    /// Zero-mean, unit-variance columns.
    pub fn standardized(&self) -> Result<Self> {
        let (m, s) = self.column_moments();
        self.standardized_with(&m, &s)
    }
}
