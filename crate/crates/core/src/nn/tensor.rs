use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Floating point types the engine runs on.
pub trait Real:
    Float
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Default
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
    fn lit(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn lit(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn lit(v: f64) -> Self {
        v
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// Class label, 1-based (`1..=L`).
///
/// Raw dataset labels are 0-based; parsers shift them with [`Label::from_index`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Label(u16);

impl Label {
    /// Label from a 0-based class index.
    pub fn from_index(index: usize) -> Self {
        assert!(index < u16::MAX as usize, "class index {index} too large");
        Label(index as u16 + 1)
    }

    pub fn from_one_based(label: usize) -> Option<Self> {
        (1..=u16::MAX as usize)
            .contains(&label)
            .then_some(Label(label as u16))
    }

    /// 1-based value.
    pub fn get(self) -> usize {
        self.0 as usize
    }

    /// 0-based class index.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn check(self, num_classes: usize) -> Result<Self> {
        if self.get() > num_classes {
            return Err(Error::LabelOutOfRange {
                label: self.get(),
                num_classes,
            });
        }
        Ok(self)
    }
}

impl TryFrom<usize> for Label {
    type Error = Error;

    fn try_from(v: usize) -> Result<Self> {
        Label::from_one_based(v).ok_or(Error::LabelOutOfRange {
            label: v,
            num_classes: u16::MAX as usize,
        })
    }
}

impl From<Label> for usize {
    fn from(l: Label) -> usize {
        l.get()
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Dense row-major tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<F> {
    shape: Vec<usize>,
    data: Vec<F>,
}

impl<F: Real> Tensor<F> {
    pub fn new(shape: Vec<usize>, data: Vec<F>) -> Result<Self> {
        let expected = shape.iter().product::<usize>();
        if shape.is_empty() || shape.contains(&0) || expected != data.len() {
            return Err(Error::TensorSize {
                shape,
                expected,
                actual: data.len(),
            });
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape,
            data: vec![F::zero(); n],
        }
    }

    /// One-dimensional tensor.
    pub fn vector(data: Vec<F>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn as_slice(&self) -> &[F] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<F> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn map(&self, f: impl Fn(F) -> F) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn cast<G: Real>(&self) -> Tensor<G> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| G::lit(v.as_f64())).collect(),
        }
    }

    pub(crate) fn reshaped(self, shape: Vec<usize>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), self.data.len());
        Tensor {
            shape,
            data: self.data,
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
