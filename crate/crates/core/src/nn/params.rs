use alloc::vec;
use alloc::vec::Vec;

use super::{Architecture, Real};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"TFPV";
const VERSION: u16 = 1;
const HEADER_LEN: usize = 8 + 8;

/// Flat view of every weight and bias of a network, tagged with the layout
/// fingerprint of the architecture it belongs to.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterVector<F> {
    values: Vec<F>,
    layout: u64,
}

impl<F: Real> ParameterVector<F> {
    pub fn zeros(arch: &Architecture) -> Self {
        ParameterVector {
            values: vec![F::zero(); arch.param_count()],
            layout: arch.fingerprint(),
        }
    }

    pub fn from_values(arch: &Architecture, values: Vec<F>) -> Result<Self> {
        if values.len() != arch.param_count() {
            return Err(Error::LayoutMismatch {
                expected: arch.param_count(),
                actual: values.len(),
                expected_layout: arch.fingerprint(),
                actual_layout: arch.fingerprint(),
            });
        }
        Ok(ParameterVector {
            values,
            layout: arch.fingerprint(),
        })
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [F] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<F> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn layout(&self) -> u64 {
        self.layout
    }

    pub fn check_layout(&self, other: &Self) -> Result<()> {
        if self.layout != other.layout || self.values.len() != other.values.len() {
            return Err(Error::LayoutMismatch {
                expected: self.values.len(),
                actual: other.values.len(),
                expected_layout: self.layout,
                actual_layout: other.layout,
            });
        }
        Ok(())
    }

    pub fn check_arch(&self, arch: &Architecture) -> Result<()> {
        if self.layout != arch.fingerprint() || self.values.len() != arch.param_count() {
            return Err(Error::LayoutMismatch {
                expected: arch.param_count(),
                actual: self.values.len(),
                expected_layout: arch.fingerprint(),
                actual_layout: self.layout,
            });
        }
        Ok(())
    }

    pub fn cast<G: Real>(&self) -> ParameterVector<G> {
        ParameterVector {
            values: self.values.iter().map(|v| G::lit(v.as_f64())).collect(),
            layout: self.layout,
        }
    }

    pub(crate) fn scale(&mut self, factor: F) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }
}

impl ParameterVector<f32> {
    /// Binary blob: `"TFPV"`, version `u16`, reserved `u16`, value count
    /// `u64`, then the values as little-endian `f32`.
    pub fn to_bytes(&self) -> Vec<u8> {
        encode_blob(&self.values)
    }

    pub fn from_bytes(arch: &Architecture, bytes: &[u8]) -> Result<Self> {
        ParameterVector::from_values(arch, decode_blob(bytes)?)
    }
}

pub(crate) fn encode_blob(values: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * values.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub(crate) fn decode_blob(bytes: &[u8]) -> Result<Vec<f32>> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            what: "parameter blob header",
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::BadMagic {
            format: "parameter blob",
            expected: u32::from_be_bytes(*MAGIC),
            found: u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]),
        });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let mut len = [0u8; 8];
    len.copy_from_slice(&bytes[8..16]);
    let n = u64::from_le_bytes(len) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != n * 4 {
        return Err(Error::Truncated {
            what: "parameter blob body",
            expected: n * 4,
            actual: body.len(),
        });
    }
    Ok(body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let blob = encode_blob(&[1.0, -2.5]);
        assert_eq!(&blob[..4], b"TFPV");
        assert_eq!(&blob[4..6], &[1, 0]);
        assert_eq!(&blob[6..8], &[0, 0]);
        assert_eq!(&blob[8..16], &2u64.to_le_bytes());
        assert_eq!(&blob[16..20], &1.0f32.to_le_bytes());
        assert_eq!(blob.len(), 24);
    }

    #[test]
    fn rejects_bad_blobs() {
        let mut blob = encode_blob(&[1.0, 2.0]);
        assert!(matches!(decode_blob(&blob[..10]), Err(Error::Truncated { .. })));
        assert!(matches!(decode_blob(&blob[..20]), Err(Error::Truncated { .. })));
        blob[4] = 9;
        assert!(matches!(decode_blob(&blob), Err(Error::UnsupportedVersion(9))));
        blob[0] = b'X';
        assert!(matches!(decode_blob(&blob), Err(Error::BadMagic { .. })));
    }

    proptest! {
        #[test]
        fn blob_round_trip_is_bit_exact(bits in proptest::collection::vec(any::<u32>(), 0..64)) {
            let values: Vec<f32> = bits.iter().map(|&b| f32::from_bits(b)).collect();
            let back = decode_blob(&encode_blob(&values)).unwrap();
            let back_bits: Vec<u32> = back.iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(back_bits, bits);
        }
    }
}
