//! Update rules, preconditioner, step-size schedules and the chain driver.

mod chain;
mod precond;
mod schedule;
mod step;

pub use chain::{run_chain, run_chain_with, Algorithm, EpochSampler, SamplerConfig, StepEvent, StepUnits};
pub use precond::{gamma_term, precond_update, PreconditionerState};
pub use schedule::{Compliance, StepSchedule};
pub use step::{psgld_step, rmsprop_step, sgd_step, sgld_step};
