//! MNIST IDX files: big-endian u32 magic, big-endian u32 dimensions, then
//! one unsigned byte per value.

use alloc::vec;
use alloc::vec::Vec;

use super::{Dataset, Sample, Split};
use crate::nn::{Label, Tensor};
use crate::{Error, Result};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

const MNIST_CLASSES: usize = 10;

fn be_u32(bytes: &[u8], at: usize, what: &'static str) -> Result<u32> {
    let chunk = bytes.get(at..at + 4).ok_or(Error::Truncated {
        what,
        expected: at + 4,
        actual: bytes.len(),
    })?;
    Ok(u32::from_be_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]))
}

fn header(bytes: &[u8], magic: u32, dims: usize, what: &'static str) -> Result<Vec<usize>> {
    let found = be_u32(bytes, 0, what)?;
    if found != magic {
        return Err(Error::BadMagic {
            format: what,
            expected: magic,
            found,
        });
    }
    (0..dims).map(|d| be_u32(bytes, 4 + 4 * d, what).map(|v| v as usize)).collect()
}

fn payload<'a>(bytes: &'a [u8], offset: usize, len: usize, what: &'static str) -> Result<&'a [u8]> {
    let expected = offset + len;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            what,
            expected,
            actual: bytes.len(),
        });
    }
    Ok(&bytes[offset..expected])
}

/// Parses an image file and a label file into a raw 1×rows×cols dataset
/// with labels shifted to `1..=10`.
pub fn parse_idx(images: &[u8], labels: &[u8], split: Split) -> Result<Dataset> {
    let dims = header(images, IDX_IMAGES_MAGIC, 3, "IDX images")?;
    let (n, rows, cols) = (dims[0], dims[1], dims[2]);
    let label_count = header(labels, IDX_LABELS_MAGIC, 1, "IDX labels")?[0];
    if n != label_count {
        return Err(Error::CountMismatch {
            images: n,
            labels: label_count,
        });
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let pixels = rows * cols;
    let image_bytes = payload(images, 16, n * pixels, "IDX images")?;
    let label_bytes = payload(labels, 8, n, "IDX labels")?;

    let samples = image_bytes
        .chunks_exact(pixels)
        .zip(label_bytes)
        .enumerate()
        .map(|(i, (px, &y))| {
            let label = Label::from_index(y as usize).check(MNIST_CLASSES)?;
            let data = px.iter().map(|&b| b as f32).collect();
            Ok(Sample {
                image: Tensor::new(vec![1, rows, cols], data)?,
                label,
                source_id: i,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(samples, split, MNIST_CLASSES)
}

/// IDX image file for `n` images of `rows×cols` bytes.
pub fn encode_idx_images(n: usize, rows: usize, cols: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), n * rows * cols);
    let mut out = Vec::with_capacity(16 + pixels.len());
    for v in [IDX_IMAGES_MAGIC, n as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(pixels);
    out
}

/// IDX label file; `labels` are raw 0-based bytes.
pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
