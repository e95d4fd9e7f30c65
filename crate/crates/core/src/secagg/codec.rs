use crate::error::{Error, Result};

pub const DEFAULT_SCALE_BITS: u32 = 20;

/// Vector of residues modulo 2^64. All arithmetic wraps.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldVector(Vec<u64>);

impl FieldVector {
    pub const ELEMENT_BYTES: usize = 8;

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn from_residues(residues: Vec<u64>) -> Self {
        Self(residues)
    }

    pub fn residues(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add_assign(&mut self, other: &FieldVector) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a = a.wrapping_add(*b);
        }
    }

    pub fn sub_assign(&mut self, other: &FieldVector) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a = a.wrapping_sub(*b);
        }
    }

    pub fn neg(&self) -> FieldVector {
        FieldVector(self.0.iter().map(|r| r.wrapping_neg()).collect())
    }

    /// Wrapping sum of equal-length vectors.
    pub fn sum<'a>(len: usize, vectors: impl IntoIterator<Item = &'a FieldVector>) -> FieldVector {
        let mut acc = FieldVector::zeros(len);
        for v in vectors {
            acc.add_assign(v);
        }
        acc
    }

    pub fn byte_len(&self) -> usize {
        self.0.len() * Self::ELEMENT_BYTES
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.0.iter().flat_map(|r| r.to_le_bytes()).collect()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if !bytes.len().is_multiple_of(Self::ELEMENT_BYTES) {
            return Err(Error::protocol(format!("field payload of {} bytes is not a whole number of elements", bytes.len())));
        }
        Ok(Self(bytes.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect()))
    }
}

/// Fixed-point map from reals to residues: `x -> round(x * 2^scale_bits)`,
/// negatives in two's complement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedPointCodec {
    scale_bits: u32,
}

impl Default for FixedPointCodec {
    fn default() -> Self {
        Self { scale_bits: DEFAULT_SCALE_BITS }
    }
}

impl FixedPointCodec {
    pub fn new(scale_bits: u32) -> Result<Self> {
        if scale_bits > 52 {
            return Err(Error::config(format!("scale_bits = {scale_bits} leaves no integer headroom (max 52)")));
        }
        Ok(Self { scale_bits })
    }

    /// Integer codec (scale 1), used for counts.
    pub fn integer() -> Self {
        Self { scale_bits: 0 }
    }

    pub fn scale_bits(&self) -> u32 {
        self.scale_bits
    }

    pub fn scale(&self) -> f64 {
        (self.scale_bits as f64).exp2()
    }

    /// Largest per-coordinate decoding error of a sum of `n_summands` encodings.
    pub fn quantization_bound(&self, n_summands: usize) -> f64 {
        n_summands as f64 / (2.0 * self.scale())
    }

    /// Encodes `x`, refusing values whose sum over `n_summands` parties could
    /// leave the signed range of the field.
    pub fn encode(&self, x: &[f64], n_summands: usize) -> Result<FieldVector> {
        let limit = 2f64.powi(63) / n_summands.max(1) as f64;
        let scale = self.scale();
        x.iter()
            .enumerate()
            .map(|(index, &value)| {
                let scaled = value * scale;
                if !scaled.is_finite() || scaled.abs() >= limit {
                    return Err(Error::Overflow { index, value, summands: n_summands });
                }
                Ok(scaled.round() as i64 as u64)
            })
            .collect::<Result<Vec<_>>>()
            .map(FieldVector)
    }

    pub fn decode(&self, f: &FieldVector) -> Vec<f64> {
        let scale = self.scale();
        f.0.iter().map(|&r| r as i64 as f64 / scale).collect()
    }
}
