//! Samples and datasets, byte-level parsers, normalization, per-run draws,
//! synthetic data and exact-duplicate scanning.
//!
//! Images are stored as `f32` tensors holding raw byte values `0..=255`
//! until [`Dataset::normalize`] maps them to `[-1, 1]`.

mod cifar;
mod dedup;
mod idx;
mod sampling;
mod synth;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::nn::{Example, Label, Labeled, Real, Tensor};
use crate::{Error, Result};

pub use cifar::{encode_cifar, parse_cifar, cifar_records, CifarVariant, CIFAR_IMAGE_BYTES};
pub use dedup::{
    find_duplicates_raw, find_exact_duplicates, DuplicateGroup, DuplicateKind, DuplicatePair, DuplicateReport, RawImage,
};
pub use idx::{encode_idx_images, encode_idx_labels, parse_idx, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC};
pub use sampling::{sample_run, RunDraw};
pub use synth::synth_dataset;

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    /// C×H×W.
    pub image: Tensor<f32>,
    pub label: Label,
    /// Index in the original dataset file.
    pub source_id: usize,
}

impl Labeled<f32> for Sample {
    fn input(&self) -> &Tensor<f32> {
        &self.image
    }
    fn label(&self) -> Label {
        self.label
    }
}

impl Sample {
    /// The sample as a training example in another precision.
    pub fn to_example<G: Real>(&self) -> Example<G> {
        Example {
            input: self.image.cast(),
            label: self.label,
        }
    }

    /// Raw pixel bytes. Only meaningful before normalization.
    pub fn raw_bytes(&self) -> Vec<u8> {
        self.image.as_slice().iter().map(|&v| v as u8).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    Synthetic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    split: Split,
    num_classes: usize,
    normalized: bool,
}

/// `p ↦ (p/255 − 0.5)/0.5`.
pub fn normalize_pixel(p: f32) -> f32 {
    ((p as f64 / 255.0 - 0.5) / 0.5) as f32
}

/// Inverse of [`normalize_pixel`].
pub fn denormalize_pixel(v: f32) -> f32 {
    ((v as f64 * 0.5 + 0.5) * 255.0) as f32
}

impl Dataset {
    /// Raw-valued dataset. All images must share one shape, hold values in
    /// `0..=255` and carry labels in `1..=num_classes`.
    pub fn new(samples: Vec<Sample>, split: Split, num_classes: usize) -> Result<Self> {
        let first = samples.first().ok_or(Error::EmptyDataset)?;
        let shape = first.image.shape().to_vec();
        for s in &samples {
            if s.image.shape() != shape.as_slice() {
                return Err(Error::ShapeMismatch {
                    layer: 0,
                    kind: "Dataset",
                    expected: shape,
                    actual: s.image.shape().to_vec(),
                });
            }
            s.label.check(num_classes)?;
            if s.image.as_slice().iter().any(|v| !(0.0..=255.0).contains(v)) {
                return Err(Error::AlreadyNormalized);
            }
        }
        Ok(Dataset {
            samples,
            split,
            num_classes,
            normalized: false,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn image_shape(&self) -> &[usize] {
        self.samples[0].image.shape()
    }

    /// Same split, class count and normalization state, different samples.
    pub(crate) fn with_samples(&self, samples: Vec<Sample>) -> Self {
        Dataset {
            samples,
            split: self.split,
            num_classes: self.num_classes,
            normalized: self.normalized,
        }
    }

    pub fn normalize(mut self) -> Result<Self> {
        if self.normalized {
            return Err(Error::AlreadyNormalized);
        }
        for s in &mut self.samples {
            s.image = s.image.map(normalize_pixel);
        }
        self.normalized = true;
        Ok(self)
    }

    pub fn denormalize(mut self) -> Result<Self> {
        if !self.normalized {
            return Err(Error::NotRaw);
        }
        for s in &mut self.samples {
            s.image = s.image.map(denormalize_pixel);
        }
        self.normalized = false;
        Ok(self)
    }
}
