//! CIFAR binary batches: fixed-size records of label byte(s) followed by a
//! 3×32×32 channel-major image.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Dataset, RawImage, Sample, Split};
use crate::nn::{Label, Tensor};
use crate::{Error, Result};

pub const CIFAR_IMAGE_BYTES: usize = 3 * 32 * 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CifarVariant {
    /// One label byte.
    Cifar10,
    /// Coarse then fine label byte; the fine label is used.
    Cifar100,
}

impl CifarVariant {
    pub fn label_bytes(self) -> usize {
        match self {
            CifarVariant::Cifar10 => 1,
            CifarVariant::Cifar100 => 2,
        }
    }

    pub fn record_len(self) -> usize {
        self.label_bytes() + CIFAR_IMAGE_BYTES
    }

    pub fn num_classes(self) -> usize {
        match self {
            CifarVariant::Cifar10 => 10,
            CifarVariant::Cifar100 => 100,
        }
    }

    fn what(self) -> &'static str {
        match self {
            CifarVariant::Cifar10 => "CIFAR-10 batch",
            CifarVariant::Cifar100 => "CIFAR-100 batch",
        }
    }
}

/// Borrowed records with 0-based ids counted from `first_id`.
pub fn cifar_records(bytes: &[u8], variant: CifarVariant, first_id: usize) -> Result<Vec<RawImage<'_>>> {
    let record = variant.record_len();
    if bytes.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !bytes.len().is_multiple_of(record) {
        return Err(Error::RecordLength {
            what: variant.what(),
            len: bytes.len(),
            record,
        });
    }
    bytes
        .chunks_exact(record)
        .enumerate()
        .map(|(i, r)| {
            let raw = r[variant.label_bytes() - 1] as usize;
            Ok(RawImage {
                id: first_id + i,
                label: Label::from_index(raw).check(variant.num_classes())?,
                bytes: &r[variant.label_bytes()..],
            })
        })
        .collect()
}

/// Parses a whole batch file into a raw 3×32×32 dataset.
pub fn parse_cifar(bytes: &[u8], variant: CifarVariant, split: Split) -> Result<Dataset> {
    let samples = cifar_records(bytes, variant, 0)?
        .into_iter()
        .map(|r| {
            Ok(Sample {
                image: Tensor::new(vec![3, 32, 32], r.bytes.iter().map(|&b| b as f32).collect())?,
                label: r.label,
                source_id: r.id,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(samples, split, variant.num_classes())
}

/// Serializes a raw dataset back into the batch layout. For CIFAR-100 the
/// coarse byte is written as `coarse(fine_index)`.
pub fn encode_cifar(dataset: &Dataset, variant: CifarVariant, coarse: impl Fn(usize) -> u8) -> Result<Vec<u8>> {
    if dataset.is_normalized() {
        return Err(Error::NotRaw);
    }
    if dataset.image_shape() != [3, 32, 32] {
        return Err(Error::ShapeMismatch {
            layer: 0,
            kind: "CIFAR record",
            expected: vec![3, 32, 32],
            actual: dataset.image_shape().to_vec(),
        });
    }
    let mut out = Vec::with_capacity(dataset.len() * variant.record_len());
    for s in dataset.samples() {
        let y = s.label.index() as u8;
        if variant == CifarVariant::Cifar100 {
            out.push(coarse(s.label.index()));
        }
        out.push(y);
        out.extend(s.raw_bytes());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(labels: &[u8], first: u8, last: u8) -> Vec<u8> {
        let mut r = labels.to_vec();
        let mut img = vec![100u8; CIFAR_IMAGE_BYTES];
        img[0] = first;
        img[CIFAR_IMAGE_BYTES - 1] = last;
        r.extend(img);
        r
    }

    #[test]
    fn cifar10_two_records() {
        let mut bytes = record(&[3], 1, 2);
        bytes.extend(record(&[9], 250, 255));
        let d = parse_cifar(&bytes, CifarVariant::Cifar10, Split::Train).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.image_shape(), &[3, 32, 32]);
        assert_eq!(d.samples()[0].label.get(), 4);
        assert_eq!(d.samples()[1].label.get(), 10);
        let px = d.samples()[1].image.as_slice();
        assert_eq!((px[0], px[CIFAR_IMAGE_BYTES - 1]), (250.0, 255.0));
        assert_eq!(encode_cifar(&d, CifarVariant::Cifar10, |_| 0).unwrap(), bytes);
    }

    #[test]
    fn cifar100_uses_fine_label() {
        let mut bytes = record(&[19, 72], 0, 0);
        bytes.extend(record(&[0, 1], 5, 6));
        let d = parse_cifar(&bytes, CifarVariant::Cifar100, Split::Test).unwrap();
        assert_eq!(d.num_classes(), 100);
        assert_eq!(d.samples()[0].label.get(), 73);
        assert_eq!(d.samples()[1].label.get(), 2);
        let coarse = |fine: usize| if fine == 72 { 19 } else { 0 };
        assert_eq!(encode_cifar(&d, CifarVariant::Cifar100, coarse).unwrap(), bytes);
    }

    #[test]
    fn wrong_variant_is_a_length_error() {
        let mut bytes = record(&[3], 1, 2);
        bytes.extend(record(&[4], 1, 2));
        assert_eq!(
            parse_cifar(&bytes, CifarVariant::Cifar100, Split::Train).unwrap_err(),
            Error::RecordLength {
                what: "CIFAR-100 batch",
                len: 2 * 3073,
                record: 3074
            }
        );
    }

    #[test]
    fn fine_label_out_of_range() {
        let bytes = record(&[0, 100], 0, 0);
        assert!(matches!(
            parse_cifar(&bytes, CifarVariant::Cifar100, Split::Train),
            Err(Error::LabelOutOfRange { label: 101, .. })
        ));
    }
}
