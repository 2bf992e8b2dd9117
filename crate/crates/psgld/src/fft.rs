//! FFT route to the autocovariance of long series.
//!
//! Same estimator as `psgld_core::diagnostics::autocovariance` (per-lag
//! `1/(T−t)` normalisation), computed in `O(T log T)`.

use psgld_core::diagnostics::{act, ess};
use psgld_core::Error as CoreError;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::Result;

/// `A(0..=max_lag)`.
pub fn autocovariance_fft(values: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = values.len();
    if n < 2 {
        return Err(CoreError::InsufficientSamples { needed: 2, found: n }.into());
    }
    if max_lag >= n {
        return Err(CoreError::InvalidParameter {
            name: "max_lag",
            reason: "must be smaller than the series length".into(),
        }
        .into());
    }
    let m = values.iter().sum::<f64>() / n as f64;
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = values
        .iter()
        .map(|v| Complex::new(v - m, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    buf.iter_mut().for_each(|c| *c = Complex::new(c.norm_sqr(), 0.0));
    planner.plan_fft_inverse(size).process(&mut buf);
    Ok((0..=max_lag)
        .map(|t| buf[t].re / size as f64 / (n - t) as f64)
        .collect())
}

/// `(τ, ESS)` of a series using every lag.
pub fn act_ess_fft(values: &[f64]) -> Result<(f64, f64)> {
    let a = autocovariance_fft(values, values.len() - 1)?;
    let tau = act(&a)?;
    Ok((tau, ess(values.len(), tau)))
}
