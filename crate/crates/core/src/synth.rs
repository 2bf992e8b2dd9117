//! Synthetic datasets for oracle comparisons.

use alloc::format;
use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::sigmoid;
use crate::rng::{ChainRng, NoiseSource};

/// `n` rows of standard normal features with labels `±1`, `P(+1) = σ(θ*ᵀx)`.
pub fn synth_blr(n: usize, d: usize, seed: u64, true_theta: &[f64]) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(Error::invalid("size", "n and d must be at least 1"));
    }
    if true_theta.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: true_theta.len(),
        });
    }
    let mut rng = ChainRng::seed_from(seed);
    let mut values = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
        let z: f64 = row.iter().zip(true_theta).map(|(x, w)| x * w).sum();
        labels.push(if rng.bernoulli(sigmoid(z)) { 1 } else { -1 });
        values.extend(row);
    }
    Dataset::dense(format!("synth_blr(n={n},d={d},seed={seed})"), d, values, labels)
}

/// Stand-in with the shape of the Australian credit data: 690 rows, 14
/// standardised columns, labels `±1`.
///
/// Six columns are binary indicators and the rest are log-normal, loosely
/// mimicking the mixed categorical and skewed numeric attributes.
pub fn australian_like(seed: u64) -> Result<Dataset> {
    const N: usize = 690;
    const D: usize = 14;
    let mut rng = ChainRng::seed_from(seed);
    let theta: Vec<f64> = (0..D).map(|_| rng.normal(0.0, 0.8)).collect();
    let mut values = Vec::with_capacity(N * D);
    for _ in 0..N {
        let latent = rng.standard_normal();
        for j in 0..D {
            let x = 0.5 * latent + rng.standard_normal();
            values.push(if j % 7 < 3 {
                f64::from(u8::from(x > 0.3))
            } else {
                libm::exp(0.5 * x)
            });
        }
    }
    let raw = Dataset::dense("australian_like", D, values, alloc::vec![1; N])?;
    let std = raw.standardized()?;
    let labels = (0..N)
        .map(|i| {
            let z = std.row(i).dot(&theta);
            if rng.bernoulli(sigmoid(z)) {
                1
            } else {
                -1
            }
        })
        .collect();
    let Some(values) = (match std.features() {
        crate::dataset::Features::Dense { values, .. } => Some(values.clone()),
        _ => None,
    }) else {
        unreachable!("standardized output is dense")
    };
    Dataset::dense(format!("australian_like(seed={seed})"), D, values, labels)
}
