//! Exact-duplicate scanning on raw image bytes.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::nn::Label;
use crate::seed::fnv1a64;
use crate::{Error, Result};

/// An image as stored on disk, before any conversion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RawImage<'a> {
    pub id: usize,
    pub label: Label,
    pub bytes: &'a [u8],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuplicateKind {
    WithinTrain,
    CrossSplit,
}

impl DuplicateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DuplicateKind::WithinTrain => "within_train",
            DuplicateKind::CrossSplit => "cross_split",
        }
    }
}

/// Two byte-identical images. For `CrossSplit`, `other_id` is a test id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicatePair {
    pub kind: DuplicateKind,
    pub train_id: usize,
    pub other_id: usize,
    pub label_a: Label,
    pub label_b: Label,
}

impl DuplicatePair {
    pub fn labels_differ(&self) -> bool {
        self.label_a != self.label_b
    }
}

/// A set of byte-identical training images, ids ascending.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateGroup {
    pub ids: Vec<usize>,
    pub labels: Vec<Label>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateReport {
    pub within_train: Vec<DuplicateGroup>,
    pub cross_split: Vec<DuplicatePair>,
}

impl DuplicateReport {
    pub fn is_empty(&self) -> bool {
        self.within_train.is_empty() && self.cross_split.is_empty()
    }

    /// Every unordered pair inside every within-train group.
    pub fn train_pairs(&self) -> Vec<DuplicatePair> {
        let mut out = Vec::new();
        for g in &self.within_train {
            for i in 0..g.ids.len() {
                for j in i + 1..g.ids.len() {
                    out.push(DuplicatePair {
                        kind: DuplicateKind::WithinTrain,
                        train_id: g.ids[i],
                        other_id: g.ids[j],
                        label_a: g.labels[i],
                        label_b: g.labels[j],
                    });
                }
            }
        }
        out
    }

    /// Within-train pairs followed by cross-split pairs.
    pub fn pairs(&self) -> Vec<DuplicatePair> {
        let mut out = self.train_pairs();
        out.extend_from_slice(&self.cross_split);
        out
    }

    pub fn label_mismatches(&self) -> Vec<DuplicatePair> {
        self.pairs().into_iter().filter(DuplicatePair::labels_differ).collect()
    }
}

/// Groups `train` by content, then matches every `test` image against it.
/// Hash buckets are always confirmed by a full byte comparison.
pub fn find_duplicates_raw(train: &[RawImage<'_>], test: &[RawImage<'_>]) -> Result<DuplicateReport> {
    scan(train, test, fnv1a64)
}

fn scan(train: &[RawImage<'_>], test: &[RawImage<'_>], hash: fn(&[u8]) -> u64) -> Result<DuplicateReport> {
    let Some(len) = train.first().map(|r| r.bytes.len()) else {
        return Ok(DuplicateReport::default());
    };
    if let Some(bad) = train.iter().chain(test).find(|r| r.bytes.len() != len) {
        return Err(Error::LengthMismatch {
            left: len,
            right: bad.bytes.len(),
        });
    }

    let mut buckets: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, r) in train.iter().enumerate() {
        buckets.entry(hash(r.bytes)).or_default().push(i);
    }

    let mut report = DuplicateReport::default();
    for members in buckets.values().filter(|m| m.len() > 1) {
        // Split the bucket into byte-equal classes.
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for &i in members {
            match classes.iter_mut().find(|c| train[c[0]].bytes == train[i].bytes) {
                Some(c) => c.push(i),
                None => classes.push(alloc::vec![i]),
            }
        }
        for mut c in classes.into_iter().filter(|c| c.len() > 1) {
            c.sort_by_key(|&i| train[i].id);
            report.within_train.push(DuplicateGroup {
                ids: c.iter().map(|&i| train[i].id).collect(),
                labels: c.iter().map(|&i| train[i].label).collect(),
            });
        }
    }
    report.within_train.sort_by_key(|g| g.ids[0]);

    for t in test {
        let Some(members) = buckets.get(&hash(t.bytes)) else {
            continue;
        };
        for &i in members.iter().filter(|&&i| train[i].bytes == t.bytes) {
            report.cross_split.push(DuplicatePair {
                kind: DuplicateKind::CrossSplit,
                train_id: train[i].id,
                other_id: t.id,
                label_a: train[i].label,
                label_b: t.label,
            });
        }
    }
    report.cross_split.sort_by_key(|p| (p.train_id, p.other_id));
    Ok(report)
}

fn view(v: &[(usize, Label, Vec<u8>)]) -> Vec<RawImage<'_>> {
    v.iter()
        .map(|(id, label, bytes)| RawImage {
            id: *id,
            label: *label,
            bytes,
        })
        .collect()
}

fn raw_view(d: &Dataset) -> Result<Vec<(usize, Label, Vec<u8>)>> {
    if d.is_normalized() {
        return Err(Error::NotRaw);
    }
    Ok(d.samples().iter().map(|s| (s.source_id, s.label, s.raw_bytes())).collect())
}

/// Dataset form of [`find_duplicates_raw`]; ids are `source_id`s.
pub fn find_exact_duplicates(train: &Dataset, test: Option<&Dataset>) -> Result<DuplicateReport> {
    if let Some(t) = test {
        if t.image_shape() != train.image_shape() {
            return Err(Error::ShapeMismatch {
                layer: 0,
                kind: "test split",
                expected: train.image_shape().to_vec(),
                actual: t.image_shape().to_vec(),
            });
        }
    }
    let tr = raw_view(train)?;
    let te = match test {
        Some(t) => raw_view(t)?,
        None => Vec::new(),
    };
    find_duplicates_raw(&view(&tr), &view(&te))
}
