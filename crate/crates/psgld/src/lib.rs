//! Data ingestion, experiment drivers, metrics files and the command line
//! front end around `psgld-core`.

pub mod cli;
pub mod data_io;
pub mod error;
pub mod experiments;
pub mod fft;
pub mod metrics;

pub use error::{Error, Result};
