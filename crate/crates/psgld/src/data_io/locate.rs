//! Named datasets under a data root.
//!
//! Roots are searched in order: `$PSGLD_DATA_DIR`, `./data`, `$HOME/data`.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use psgld_core::synth::australian_like;
use psgld_core::Dataset;

use super::{images_to_dataset, parse_dense, parse_libsvm, read_idx};
use crate::error::{Error, Result};

pub const DATA_DIR_ENV: &str = "PSGLD_DATA_DIR";

/// Feature width of the a9a train and test files.
pub const A9A_FEATURES: usize = 123;

pub fn data_roots() -> Vec<PathBuf> {
    let mut roots = Vec::new();
    if let Some(d) = std::env::var_os(DATA_DIR_ENV) {
        roots.push(PathBuf::from(d));
    }
    roots.push(PathBuf::from("data"));
    if let Some(h) = std::env::var_os("HOME") {
        roots.push(Path::new(&h).join("data"));
    }
    roots
}

fn find(candidates: &[&str]) -> Option<PathBuf> {
    data_roots()
        .into_iter()
        .flat_map(|r| candidates.iter().map(move |c| r.join(c)))
        .find(|p| p.is_file())
}

fn missing(name: &str, candidates: &[&str]) -> Error {
    let roots: Vec<String> = data_roots().iter().map(|r| r.display().to_string()).collect();
    Error::MissingDataset {
        name: name.into(),
        looked: format!("{} for {}", roots.join(", "), candidates.join(" | ")),
    }
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

pub fn load_libsvm_file(path: &Path, cols: Option<usize>) -> Result<Dataset> {
    let name = path.file_name().map_or("libsvm".into(), |n| n.to_string_lossy().into_owned());
    parse_libsvm(open(path)?, &name, cols)
}

pub fn load_dense_file(path: &Path) -> Result<Dataset> {
    let name = path.file_name().map_or("dense".into(), |n| n.to_string_lossy().into_owned());
    parse_dense(open(path)?, &name)
}

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    File(PathBuf),
    Synthetic(String),
}

impl Source {
    pub fn describe(&self) -> String {
        match self {
            Source::File(p) => p.display().to_string(),
            Source::Synthetic(s) => format!("synthetic:{s}"),
        }
    }
}

const AUSTRALIAN: [&str; 4] = [
    "australian/australian.dat",
    "australian/australian",
    "australian.dat",
    "australian",
];

/// The Australian credit data, standardised to zero mean and unit variance.
///
/// With `fallback_seed`, a missing file is replaced by the synthetic
/// stand-in of the same shape.
pub fn load_australian(fallback_seed: Option<u64>) -> Result<(Dataset, Source)> {
    match find(&AUSTRALIAN) {
        Some(path) => {
            let raw = if path.extension().is_some_and(|e| e == "dat") {
                load_dense_file(&path)?
            } else {
                load_libsvm_file(&path, None)?
            };
            Ok((raw.standardized()?, Source::File(path)))
        }
        None => match fallback_seed {
            Some(seed) => Ok((
                australian_like(seed)?,
                Source::Synthetic(format!("australian_like(seed={seed})")),
            )),
            None => Err(missing("australian", &AUSTRALIAN)),
        },
    }
}

/// a9a train and test splits, both pinned to 123 columns.
pub fn load_a9a() -> Result<(Dataset, Dataset, Source)> {
    const TRAIN: [&str; 2] = ["a9a/a9a", "a9a"];
    const TEST: [&str; 2] = ["a9a/a9a.t", "a9a.t"];
    let train = find(&TRAIN).ok_or_else(|| missing("a9a", &TRAIN))?;
    let test = find(&TEST).ok_or_else(|| missing("a9a.t", &TEST))?;
    Ok((
        load_libsvm_file(&train, Some(A9A_FEATURES))?,
        load_libsvm_file(&test, Some(A9A_FEATURES))?,
        Source::File(train),
    ))
}

/// MNIST train and test sets, each optionally truncated to its first rows.
pub fn load_mnist(train_limit: Option<usize>, test_limit: Option<usize>) -> Result<(Dataset, Dataset, Source)> {
    let part = |images: &str, labels: &str, limit| -> Result<(Dataset, PathBuf)> {
        let img_c = [format!("mnist/{images}"), images.to_string()];
        let lab_c = [format!("mnist/{labels}"), labels.to_string()];
        let img_refs: Vec<&str> = img_c.iter().map(String::as_str).collect();
        let lab_refs: Vec<&str> = lab_c.iter().map(String::as_str).collect();
        let ip = find(&img_refs).ok_or_else(|| missing("mnist", &img_refs))?;
        let lp = find(&lab_refs).ok_or_else(|| missing("mnist", &lab_refs))?;
        let d = images_to_dataset(images, read_idx(open(&ip)?)?, read_idx(open(&lp)?)?, limit)?;
        Ok((d, ip))
    };
    let (train, path) = part("train-images-idx3-ubyte", "train-labels-idx1-ubyte", train_limit)?;
    let (test, _) = part("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte", test_limit)?;
    Ok((train, test, Source::File(path)))
}
