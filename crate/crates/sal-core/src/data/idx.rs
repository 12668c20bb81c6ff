//! IDX binary format: big-endian magic, dimension sizes, then raw `u8` data.
//! Images use magic `0x00000803` with dims `[count, rows, cols]`; labels use
//! `0x00000801` with dims `[count]`. Pixels are scaled to `[0, 1]` on load.

use std::io::Read;
use std::path::Path;

use ndarray::Array2;

use super::Dataset;
use crate::{Error, Result};

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: u64,
}

impl<'a> Cursor<'a> {
    fn u32(&mut self, what: &str) -> Result<u32> {
        if self.bytes.len() < self.pos as usize + 4 {
            return Err(Error::Parse {
                offset: self.pos,
                message: format!("truncated while reading {what}"),
            });
        }
        let p = self.pos as usize;
        let v = u32::from_be_bytes([
            self.bytes[p],
            self.bytes[p + 1],
            self.bytes[p + 2],
            self.bytes[p + 3],
        ]);
        self.pos += 4;
        Ok(v)
    }

    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() < self.pos as usize + len {
            return Err(Error::Parse {
                offset: self.pos,
                message: format!(
                    "truncated: {what} needs {len} bytes, {} remain",
                    self.bytes.len() - self.pos as usize
                ),
            });
        }
        let p = self.pos as usize;
        self.pos += len as u64;
        Ok(&self.bytes[p..p + len])
    }
}

/// Parse image + label byte buffers into a dataset.
pub fn parse_idx(images: &[u8], labels: &[u8]) -> Result<Dataset> {
    let mut img = Cursor { bytes: images, pos: 0 };
    let magic = img.u32("image magic")?;
    if magic != IMAGE_MAGIC {
        return Err(Error::Parse {
            offset: 0,
            message: format!("bad image magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}"),
        });
    }
    let count = img.u32("image count")? as usize;
    let rows = img.u32("row count")? as usize;
    let cols = img.u32("column count")? as usize;
    let pixels = img.take(count * rows * cols, "pixel data")?;

    let mut lab = Cursor { bytes: labels, pos: 0 };
    let magic = lab.u32("label magic")?;
    if magic != LABEL_MAGIC {
        return Err(Error::Parse {
            offset: 0,
            message: format!("bad label magic {magic:#010x}, expected {LABEL_MAGIC:#010x}"),
        });
    }
    let label_count = lab.u32("label count")? as usize;
    if label_count != count {
        return Err(Error::Parse {
            offset: 4,
            message: format!("label count {label_count} does not match image count {count}"),
        });
    }
    let raw_labels = lab.take(count, "label data")?;

    let in_dim = rows * cols;
    let data: Vec<f64> = pixels.iter().map(|&b| f64::from(b) / 255.0).collect();
    let inputs = Array2::from_shape_vec((count, in_dim), data)
        .map_err(|e| Error::Data(e.to_string()))?;
    let labels: Vec<usize> = raw_labels.iter().map(|&b| b as usize).collect();
    let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    Dataset::new(inputs, labels, n_classes.max(1), "idx")
}

/// Load a dataset from IDX image/label files.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let mut images = Vec::new();
    std::fs::File::open(images_path)
        .map_err(|e| Error::Data(format!("{}: {e}", images_path.display())))?
        .read_to_end(&mut images)?;
    let mut labels = Vec::new();
    std::fs::File::open(labels_path)
        .map_err(|e| Error::Data(format!("{}: {e}", labels_path.display())))?
        .read_to_end(&mut labels)?;
    parse_idx(&images, &labels)
}

/// Serialize inputs back to IDX image bytes. Values are mapped to `u8` by
/// `round(v·255)`, the exact inverse of the loader's scaling, so a
/// load → write → load round trip is bit-identical.
///
/// Only works for datasets whose row length factors as `rows × cols`; the
/// stored shape is `count × in_dim × 1`.
pub fn idx_image_bytes(ds: &Dataset) -> Vec<u8> {
    let count = ds.len() as u32;
    let in_dim = ds.in_dim() as u32;
    let mut out = Vec::with_capacity(16 + ds.len() * ds.in_dim());
    out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    out.extend_from_slice(&count.to_be_bytes());
    out.extend_from_slice(&in_dim.to_be_bytes());
    out.extend_from_slice(&1u32.to_be_bytes());
    for v in ds.inputs().iter() {
        out.push((v * 255.0).round().clamp(0.0, 255.0) as u8);
    }
    out
}

/// Serialize labels to IDX label bytes (class indices must fit in `u8`).
pub fn idx_label_bytes(ds: &Dataset) -> Result<Vec<u8>> {
    if ds.n_classes() > 256 {
        return Err(Error::Data("IDX labels are u8; more than 256 classes".into()));
    }
    let mut out = Vec::with_capacity(8 + ds.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(ds.len() as u32).to_be_bytes());
    out.extend(ds.labels().iter().map(|&l| l as u8));
    Ok(out)
}

/// Write a dataset as an IDX image/label file pair.
pub fn write_idx(ds: &Dataset, images_path: &Path, labels_path: &Path) -> Result<()> {
    std::fs::write(images_path, idx_image_bytes(ds))?;
    std::fs::write(labels_path, idx_label_bytes(ds)?)?;
    Ok(())
}
