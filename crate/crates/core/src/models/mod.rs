//! Concrete targets.

mod gaussian;
mod logistic;
mod mlp;

pub use gaussian::{gaussian_log_grad, GaussianTarget};
pub use logistic::{blr_predict, log_sigmoid, sigmoid, LogisticRegression};
pub use mlp::{mlp_forward, LayerLayout, MlpModel};
