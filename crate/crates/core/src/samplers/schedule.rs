use alloc::format;
use alloc::string::String;

use crate::error::{Error, Result};

/// Step-size sequence `ε_t`, indexed from `t = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// Fixed `ε`. Useful for experiment parity; never satisfies the
    /// decreasing-step conditions.
    Constant { eps: f64 },
    /// `a·(b + t)^(−gamma)` with `gamma ∈ (0.5, 1]`.
    Polynomial { a: f64, b: f64, gamma: f64 },
    /// `eps0` halved after every `decay_epochs` epochs of `epoch_len` iterations.
    BlockDecay {
        eps0: f64,
        decay_epochs: usize,
        epoch_len: usize,
    },
}

/// Outcome of checking a schedule against `Σε_t = ∞`, `Σε_t² < ∞`, decreasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Compliance {
    Compliant,
    /// The schedule runs, but asymptotic consistency is not guaranteed.
    NonCompliant(&'static str),
}

impl Compliance {
    pub fn is_compliant(&self) -> bool {
        matches!(self, Compliance::Compliant)
    }
}

impl StepSchedule {
    pub fn constant(eps: f64) -> Result<Self> {
        let s = StepSchedule::Constant { eps };
        s.validate().map(|_| s)
    }

    pub fn polynomial(a: f64, b: f64, gamma: f64) -> Result<Self> {
        let s = StepSchedule::Polynomial { a, b, gamma };
        s.validate().map(|_| s)
    }

    pub fn block_decay(eps0: f64, decay_epochs: usize, epoch_len: usize) -> Result<Self> {
        let s = StepSchedule::BlockDecay {
            eps0,
            decay_epochs,
            epoch_len,
        };
        s.validate().map(|_| s)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        match *self {
            StepSchedule::Constant { eps } if !positive(eps) => {
                Err(Error::invalid("step size", "eps must be positive"))
            }
            StepSchedule::Polynomial { a, b, gamma } => {
                if !positive(a) {
                    Err(Error::invalid("step size", "a must be positive"))
                } else if !(b >= 0.0 && b.is_finite()) {
                    Err(Error::invalid("step size", "b must be nonnegative"))
                } else if !(gamma > 0.5 && gamma <= 1.0) {
                    Err(Error::invalid("step size", "gamma must lie in (0.5, 1]"))
                } else {
                    Ok(())
                }
            }
            StepSchedule::BlockDecay {
                eps0,
                decay_epochs,
                epoch_len,
            } => {
                if !positive(eps0) {
                    Err(Error::invalid("step size", "eps0 must be positive"))
                } else if decay_epochs == 0 || epoch_len == 0 {
                    Err(Error::invalid(
                        "step size",
                        "decay interval and epoch length must be at least 1",
                    ))
                } else {
                    Ok(())
                }
            }
            StepSchedule::Constant { .. } => Ok(()),
        }
    }

    /// `ε_t` for `t ≥ 1` (`t = 0` is treated as `t = 1`).
    pub fn step_size(&self, t: usize) -> f64 {
        let t = t.max(1);
        match *self {
            StepSchedule::Constant { eps } => eps,
            StepSchedule::Polynomial { a, b, gamma } => a * libm::pow(b + t as f64, -gamma),
            StepSchedule::BlockDecay {
                eps0,
                decay_epochs,
                epoch_len,
            } => {
                let halvings = (t - 1) / (decay_epochs * epoch_len);
                libm::ldexp(eps0, -(halvings.min(2000) as i32))
            }
        }
    }

    pub fn compliance(&self) -> Compliance {
        match self {
            StepSchedule::Polynomial { .. } => Compliance::Compliant,
            StepSchedule::Constant { .. } => {
                Compliance::NonCompliant("constant step: sum of squared steps diverges")
            }
            StepSchedule::BlockDecay { .. } => {
                Compliance::NonCompliant("block decay: sum of steps converges")
            }
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            StepSchedule::Constant { eps } => format!("constant(eps={eps})"),
            StepSchedule::Polynomial { a, b, gamma } => {
                format!("polynomial(a={a},b={b},gamma={gamma})")
            }
            StepSchedule::BlockDecay {
                eps0,
                decay_epochs,
                epoch_len,
            } => format!("block_decay(eps0={eps0},decay_epochs={decay_epochs},epoch_len={epoch_len})"),
        }
    }
}
