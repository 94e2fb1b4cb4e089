use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("layer {layer} ({kind}): expected input shape {expected:?}, got {actual:?}")]
    ShapeMismatch {
        layer: usize,
        kind: &'static str,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),

    #[error("tensor shape {shape:?} holds {expected} values, got {actual}")]
    TensorSize {
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },

    #[error("label {label} outside 1..={num_classes}")]
    LabelOutOfRange { label: usize, num_classes: usize },

    #[error("empty batch")]
    EmptyBatch,

    #[error("parameter layout mismatch: expected {expected} values (layout {expected_layout:#018x}), got {actual} (layout {actual_layout:#018x})")]
    LayoutMismatch {
        expected: usize,
        actual: usize,
        expected_layout: u64,
        actual_layout: u64,
    },

    #[error("dataset holds {actual} samples but batch_size * num_batches = {expected}")]
    DatasetSize { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cannot select {requested} components from a vector of width {width}")]
    TooManyComponents { requested: usize, width: usize },

    #[error("trap needs {needed} units in the first f1 hidden layer but only {available} exist")]
    HiddenTooNarrow { needed: usize, available: usize },

    #[error("lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("input sits on the trap boundary (sum |a - eta| == epsilon == {epsilon})")]
    TrapKink { epsilon: f64 },

    #[error("reference run left epsilon unchanged; the target does not trigger its own trap")]
    ZeroReference,

    #[error("no clients selected")]
    EmptySelection,

    #[error("nothing to aggregate")]
    NoAnswers,

    #[error("AUC is undefined without both member and non-member records")]
    SingleClass,

    #[error("{format}: bad magic {found:#010x}, expected {expected:#010x}")]
    BadMagic {
        format: &'static str,
        expected: u32,
        found: u32,
    },

    #[error("{what}: truncated, expected {expected} bytes, got {actual}")]
    Truncated {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("image file holds {images} items but label file holds {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("{what}: length {len} is not a multiple of the {record}-byte record")]
    RecordLength {
        what: &'static str,
        len: usize,
        record: usize,
    },

    #[error("dataset is already normalized")]
    AlreadyNormalized,

    #[error("dataset is normalized; raw pixel bytes are required")]
    NotRaw,

    #[error("cannot draw {requested} training samples from a pool of {available}")]
    PoolTooSmall { requested: usize, available: usize },

    #[error("unsupported parameter blob version {0}")]
    UnsupportedVersion(u16),
}
