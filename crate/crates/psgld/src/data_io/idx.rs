//! IDX big-endian binary files (the MNIST distribution format).

use std::io::Read;

use psgld_core::Dataset;

use crate::error::{Error, Result};

const MAGIC_LABELS: u32 = 0x0000_0801;
const MAGIC_IMAGES: u32 = 0x0000_0803;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdxData {
    Labels(Vec<u8>),
    Images {
        count: usize,
        rows: usize,
        cols: usize,
        /// Row-major pixels, `count·rows·cols` bytes.
        pixels: Vec<u8>,
    },
}

fn be_u32(buf: &[u8], at: usize) -> Result<u32> {
    buf.get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format("idx: truncated header".into()))
}

/// Reads a whole IDX stream. The payload must hold exactly the declared
/// number of elements.
pub fn read_idx(mut reader: impl Read) -> Result<IdxData> {
    let mut buf = Vec::new();
    reader
        .read_to_end(&mut buf)
        .map_err(|e| Error::Format(format!("idx: {e}")))?;
    let magic = be_u32(&buf, 0)?;
    let (dims, header) = match magic {
        MAGIC_LABELS => (vec![be_u32(&buf, 4)? as usize], 8),
        MAGIC_IMAGES => (
            vec![
                be_u32(&buf, 4)? as usize,
                be_u32(&buf, 8)? as usize,
                be_u32(&buf, 12)? as usize,
            ],
            16,
        ),
        other => return Err(Error::Format(format!("idx: bad magic {other:#010x}"))),
    };
    let declared = dims
        .iter()
        .try_fold(1usize, |a, d| a.checked_mul(*d))
        .ok_or_else(|| Error::Format("idx: declared size overflows".into()))?;
    let payload = buf.len() - header;
    if payload != declared {
        return Err(Error::Format(format!(
            "idx: header declares {declared} elements but payload has {payload}"
        )));
    }
    buf.drain(..header);
    Ok(match magic {
        MAGIC_LABELS => IdxData::Labels(buf),
        _ => IdxData::Images {
            count: dims[0],
            rows: dims[1],
            cols: dims[2],
            pixels: buf,
        },
    })
}

/// Pairs an image file with a label file. Pixels are scaled to `[0, 1]` by
/// `/255`; only the first `limit` examples are kept when given.
pub fn images_to_dataset(name: &str, images: IdxData, labels: IdxData, limit: Option<usize>) -> Result<Dataset> {
    let (IdxData::Images { count, rows, cols, pixels }, IdxData::Labels(labels)) = (images, labels) else {
        return Err(Error::Format("idx: expected an image file and a label file".into()));
    };
    if labels.len() != count {
        return Err(Error::Format(format!(
            "idx: {count} images but {} labels",
            labels.len()
        )));
    }
    let n = limit.map_or(count, |l| l.min(count));
    let width = rows * cols;
    let values = pixels[..n * width].iter().map(|p| f64::from(*p) / 255.0).collect();
    let labels = labels[..n].iter().map(|l| i32::from(*l)).collect();
    Ok(Dataset::dense(name, width, values, labels)?)
}
