//! Dataset readers and writers, trace files and run configuration.

mod config;
mod dense;
mod idx;
mod libsvm;
pub mod locate;
mod trace_file;

pub use config::{RunConfig, CONFIG_KEYS};
pub use dense::parse_dense;
pub use idx::{images_to_dataset, read_idx, IdxData};
pub use libsvm::{parse_libsvm, write_libsvm};
pub use trace_file::{read_trace, write_trace, TRACE_FORMAT, TRACE_VERSION};

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use psgld_core::SampleTrace;

use crate::error::{Error, Result};

pub fn write_trace_file(trace: &SampleTrace, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_trace(trace, BufWriter::new(f))
}

pub fn read_trace_file(path: &Path) -> Result<SampleTrace> {
    read_trace(locate::open(path)?)
}
