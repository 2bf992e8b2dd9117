use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model_api::{GradientEstimate, ParamVector};

/// RMSprop second-moment accumulator behind the diagonal preconditioner
///
/// `V ← α·V + (1 − α)·ḡ⊙ḡ`, `G = 1 ⊘ (λ + √V)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreconditionerState {
    second_moment: Vec<f64>,
    alpha: f64,
    lambda: f64,
}

impl PreconditionerState {
    pub const DEFAULT_ALPHA: f64 = 0.99;
    pub const DEFAULT_LAMBDA: f64 = 1e-5;

    /// Starts from `V = 0`.
    pub fn new(dim: usize, alpha: f64, lambda: f64) -> Result<Self> {
        Self::from_second_moment(alloc::vec![0.0; dim], alpha, lambda)
    }

    pub fn from_second_moment(v: Vec<f64>, alpha: f64, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::invalid("alpha", "must lie in [0, 1]"));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid("lambda", "must be positive"));
        }
        if v.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::invalid("second moment", "entries must be finite and >= 0"));
        }
        Ok(Self {
            second_moment: v,
            alpha,
            lambda,
        })
    }

    pub fn with_defaults(dim: usize) -> Self {
        Self::new(dim, Self::DEFAULT_ALPHA, Self::DEFAULT_LAMBDA).unwrap()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }

    /// Folds in the current gradient and writes the new diagonal `G` into `g_diag`.
    pub fn update_into(&mut self, g_bar: &[f64], g_diag: &mut [f64]) {
        let (a, lam) = (self.alpha, self.lambda);
        for ((v, &g), out) in self.second_moment.iter_mut().zip(g_bar).zip(g_diag) {
            *v = a * *v + (1.0 - a) * g * g;
            *out = 1.0 / (lam + libm::sqrt(*v));
        }
    }

    pub fn update(&mut self, g_bar: &[f64]) -> ParamVector {
        let mut g = ParamVector::zeros(self.second_moment.len());
        self.update_into(g_bar, &mut g);
        g
    }

    /// Diagonal of `G` for the current `V`.
    pub fn diag(&self) -> ParamVector {
        self.second_moment
            .iter()
            .map(|v| 1.0 / (self.lambda + libm::sqrt(*v)))
            .collect::<Vec<_>>()
            .into()
    }

    /// `Γ_i = ∂G_ii/∂θ_i`, differentiating only the current `ḡ⊙ḡ` term of the
    /// freshly updated `V`:
    ///
    /// `Γ_i = −(1 − α)·ḡ_i·h_i / (√V_i·(λ + √V_i)²)` with `h_i = ∂ḡ_i/∂θ_i`.
    /// Entries with `V_i = 0` are zero.
    pub fn gamma_term_into(&self, g_bar: &[f64], diag_hess: &[f64], out: &mut [f64]) {
        let (a, lam) = (self.alpha, self.lambda);
        for (((o, &v), &g), &h) in out
            .iter_mut()
            .zip(&self.second_moment)
            .zip(g_bar)
            .zip(diag_hess)
        {
            *o = if v > 0.0 {
                let s = libm::sqrt(v);
                -(1.0 - a) * g * h / (s * (lam + s) * (lam + s))
            } else {
                0.0
            };
        }
    }
}

/// Functional form of one preconditioner step: returns `(V', G)` and leaves
/// `state` untouched.
pub fn precond_update(
    state: &PreconditionerState,
    grad: &GradientEstimate,
) -> (ParamVector, ParamVector) {
    let mut next = state.clone();
    let g = next.update(&grad.g_bar);
    (next.second_moment.into(), g)
}

/// Γ for a state whose `V` already includes the current gradient.
pub fn gamma_term(
    state: &PreconditionerState,
    grad: &GradientEstimate,
    diag_hess: &[f64],
) -> Result<ParamVector> {
    let d = state.second_moment.len();
    if grad.g_bar.len() != d || diag_hess.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: if grad.g_bar.len() != d {
                grad.g_bar.len()
            } else {
                diag_hess.len()
            },
        });
    }
    let mut out = ParamVector::zeros(d);
    state.gamma_term_into(&grad.g_bar, diag_hess, &mut out);
    Ok(out)
}
