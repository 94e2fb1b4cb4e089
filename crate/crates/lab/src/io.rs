//! Files: gzip-transparent reads, dataset loaders, parameter blobs and
//! parser fixtures.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use relutrap_core::data::{
    encode_cifar, encode_idx_images, encode_idx_labels, parse_cifar, parse_idx, synth_dataset, CifarVariant, Dataset,
    Sample, Split,
};
use relutrap_core::{Architecture, Label, ParameterVector};

use crate::error::{LabError, Result};

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

/// Reads a file, inflating it if it starts with the gzip magic.
pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| LabError::io(path, e))?;
    if raw.starts_with(&GZIP_MAGIC) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| LabError::io(path, e))?;
        return Ok(out);
    }
    Ok(raw)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| LabError::io(path, e))
}

/// First existing path among `base` and `base.gz`.
pub fn find_maybe_gz(base: &Path) -> Option<PathBuf> {
    let mut gz = base.as_os_str().to_owned();
    gz.push(".gz");
    [base.to_path_buf(), PathBuf::from(gz)].into_iter().find(|p| p.is_file())
}

pub fn load_mnist_idx(images: &Path, labels: &Path) -> Result<Dataset> {
    Ok(parse_idx(&read_bytes(images)?, &read_bytes(labels)?, Split::Train)?)
}

pub fn load_cifar(path: &Path, variant: CifarVariant) -> Result<Dataset> {
    Ok(parse_cifar(&read_bytes(path)?, variant, Split::Train)?)
}

/// Concatenated bytes of the standard training batch files under `dir`.
pub fn cifar_train_bytes(dir: &Path, variant: CifarVariant) -> Result<Vec<u8>> {
    let names: Vec<String> = match variant {
        CifarVariant::Cifar10 => (1..=5).map(|i| format!("data_batch_{i}.bin")).collect(),
        CifarVariant::Cifar100 => vec!["train.bin".into()],
    };
    let mut out = Vec::new();
    for n in names {
        out.extend(read_bytes(&dir.join(n))?);
    }
    Ok(out)
}

/// Standard test batch file under `dir`.
pub fn cifar_test_path(dir: &Path, variant: CifarVariant) -> PathBuf {
    dir.join(match variant {
        CifarVariant::Cifar10 => "test_batch.bin",
        CifarVariant::Cifar100 => "test.bin",
    })
}

/// One label name per line, as shipped with the CIFAR binaries.
pub fn read_label_names(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

/// Which training pool an experiment draws from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Mnist,
    Cifar10,
    Cifar100,
    Synthetic,
}

impl DatasetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::Mnist => "mnist",
            DatasetKind::Cifar10 => "cifar10",
            DatasetKind::Cifar100 => "cifar100",
            DatasetKind::Synthetic => "synthetic",
        }
    }
}

pub const SYNTHETIC_SHAPE: [usize; 3] = [1, 28, 28];
pub const SYNTHETIC_CLASSES: usize = 10;

/// Raw training pool for an experiment.
///
/// File layout under `data_dir`: `mnist/train-{images-idx3,labels-idx1}-ubyte[.gz]`,
/// `cifar-10-batches-bin/data_batch_{1..5}.bin`, `cifar-100-binary/train.bin`.
/// The synthetic pool holds `max(2N, 64)` noise images.
pub fn load_pool(kind: DatasetKind, data_dir: &Path, n: usize, seed: u64) -> Result<Dataset> {
    match kind {
        DatasetKind::Mnist => {
            let dir = data_dir.join("mnist");
            let find = |stem: &str| {
                find_maybe_gz(&dir.join(stem))
                    .ok_or_else(|| LabError::Config(format!("MNIST file {stem}[.gz] not found in {}", dir.display())))
            };
            load_mnist_idx(&find("train-images-idx3-ubyte")?, &find("train-labels-idx1-ubyte")?)
        }
        DatasetKind::Cifar10 | DatasetKind::Cifar100 => {
            let (variant, sub) = match kind {
                DatasetKind::Cifar10 => (CifarVariant::Cifar10, "cifar-10-batches-bin"),
                _ => (CifarVariant::Cifar100, "cifar-100-binary"),
            };
            let dir = data_dir.join(sub);
            if !dir.is_dir() {
                return Err(LabError::Config(format!("{} not found", dir.display())));
            }
            Ok(parse_cifar(&cifar_train_bytes(&dir, variant)?, variant, Split::Train)?)
        }
        DatasetKind::Synthetic => Ok(synth_dataset((2 * n).max(64), SYNTHETIC_CLASSES, &SYNTHETIC_SHAPE, seed)?),
    }
}

pub fn write_params(path: &Path, params: &ParameterVector<f32>) -> Result<()> {
    write_bytes(path, &params.to_bytes())
}

pub fn read_params(path: &Path, arch: &Architecture) -> Result<ParameterVector<f32>> {
    Ok(ParameterVector::from_bytes(arch, &read_bytes(path)?)?)
}

/// Paths written by [`write_fixtures`].
#[derive(Clone, Debug)]
pub struct Fixtures {
    pub mnist_images: PathBuf,
    pub mnist_labels: PathBuf,
    pub cifar10: PathBuf,
    pub cifar100: PathBuf,
    pub dedup_train: PathBuf,
    pub dedup_test: PathBuf,
}

fn cifar_sample(id: usize, label: usize, fill: impl Fn(usize) -> u8) -> Sample {
    let data = (0..3 * 32 * 32).map(|i| fill(i) as f32).collect();
    Sample {
        image: relutrap_core::Tensor::new(vec![3, 32, 32], data).expect("fixed shape"),
        label: Label::from_index(label),
        source_id: id,
    }
}

/// Small parser fixtures plus a planted-duplicate CIFAR-100 pair of files:
/// the train file holds one byte-identical pair with different labels and
/// the test file shares no image with it.
pub fn write_fixtures(dir: &Path) -> Result<Fixtures> {
    let f = Fixtures {
        mnist_images: dir.join("mnist-4-images-idx3-ubyte"),
        mnist_labels: dir.join("mnist-4-labels-idx1-ubyte"),
        cifar10: dir.join("cifar10-2.bin"),
        cifar100: dir.join("cifar100-2.bin"),
        dedup_train: dir.join("dedup-train.bin"),
        dedup_test: dir.join("dedup-test.bin"),
    };

    let pixels: Vec<u8> = (0..4 * 28 * 28).map(|i| ((i * 31 + i / 784) % 256) as u8).collect();
    write_bytes(&f.mnist_images, &encode_idx_images(4, 28, 28, &pixels))?;
    write_bytes(&f.mnist_labels, &encode_idx_labels(&[5, 0, 4, 1]))?;

    let two = Dataset::new(
        vec![cifar_sample(0, 6, |i| (i % 256) as u8), cifar_sample(1, 9, |i| 255 - (i % 256) as u8)],
        Split::Train,
        10,
    )?;
    write_bytes(&f.cifar10, &encode_cifar(&two, CifarVariant::Cifar10, |_| 0)?)?;
    let two100 = Dataset::new(
        vec![cifar_sample(0, 30, |i| (i / 12) as u8), cifar_sample(1, 99, |i| (i * 7 % 256) as u8)],
        Split::Train,
        100,
    )?;
    write_bytes(&f.cifar100, &encode_cifar(&two100, CifarVariant::Cifar100, |fine| (fine / 5) as u8)?)?;

    let noise = |n, s| synth_dataset(n, 100, &[3, 32, 32], s);
    let mut train = noise(8, 101)?.into_samples();
    train[6].image = train[1].image.clone();
    train[6].label = Label::from_index((train[1].label.index() + 1) % 100);
    let train = Dataset::new(train, Split::Train, 100)?;
    let test = noise(4, 202)?;
    write_bytes(&f.dedup_train, &encode_cifar(&train, CifarVariant::Cifar100, |_| 0)?)?;
    write_bytes(&f.dedup_test, &encode_cifar(&test, CifarVariant::Cifar100, |_| 0)?)?;
    Ok(f)
}
