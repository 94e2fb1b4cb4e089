use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::Rng;

use super::{Dataset, Sample, Split};
use crate::nn::{Label, Tensor};
use crate::{seed, Error, Result};

/// Seeded uniform-noise images with raw byte values and uniform labels in
/// `1..=num_classes`. Images are redrawn until pairwise distinct, so any
/// two samples differ in at least one pixel.
pub fn synth_dataset(num_samples: usize, num_classes: usize, image_shape: &[usize], seed: u64) -> Result<Dataset> {
    if num_samples == 0 {
        return Err(Error::EmptyDataset);
    }
    if num_classes == 0 {
        return Err(Error::InvalidConfig("num_classes must be at least 1".into()));
    }
    let pixels: usize = image_shape.iter().product();
    if pixels == 0 {
        return Err(Error::InvalidConfig("image shape has no pixels".into()));
    }
    let mut rng = seed::rng(seed);
    let mut seen = BTreeSet::new();
    let mut samples = Vec::with_capacity(num_samples);
    while samples.len() < num_samples {
        let bytes: Vec<u8> = (0..pixels).map(|_| rng.gen()).collect();
        let label = Label::from_index(rng.gen_range(0..num_classes));
        if !seen.insert(bytes.clone()) {
            continue;
        }
        samples.push(Sample {
            image: Tensor::new(image_shape.to_vec(), bytes.iter().map(|&b| b as f32).collect())?,
            label,
            source_id: samples.len(),
        });
    }
    Dataset::new(samples, Split::Synthetic, num_classes)
}
