use super::table::{ContingencyTable, Marginals};
use crate::error::{Error, Result};

/// A client's contribution `u_i[I(x, y)] = (v_xy^(i) - e_xy / n) / sqrt(e_xy)`.
///
/// Summed over all clients, the squared l2 norm equals the global statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct UVector(Vec<f64>);

impl UVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("u-vector entries must be finite"));
        }
        Ok(Self(values))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn squared_norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    /// Elementwise sum of vectors of equal length.
    pub fn sum<'a>(vectors: impl IntoIterator<Item = &'a UVector>) -> Result<UVector> {
        let mut iter = vectors.into_iter();
        let mut acc = iter.next().ok_or_else(|| Error::domain("cannot sum zero vectors"))?.0.clone();
        for v in iter {
            if v.len() != acc.len() {
                return Err(Error::domain("u-vector length mismatch"));
            }
            for (a, b) in acc.iter_mut().zip(&v.0) {
                *a += b;
            }
        }
        Ok(UVector(acc))
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &UVector, b: f64) -> Result<UVector> {
        if self.len() != other.len() {
            return Err(Error::domain("u-vector length mismatch"));
        }
        Ok(UVector(self.0.iter().zip(&other.0).map(|(x, y)| a * x + b * y).collect()))
    }
}

pub fn build_u_vector(local: &ContingencyTable, global: &Marginals, n: usize) -> Result<UVector> {
    if local.shape() != global.shape() {
        return Err(Error::domain(format!(
            "local table is {}x{} but marginals are {}x{}",
            local.rows(),
            local.cols(),
            global.shape().rows,
            global.shape().cols
        )));
    }
    let counts: Vec<f64> = local.counts().iter().map(|&v| v as f64).collect();
    u_vector_from_real_counts(&counts, global, n)
}

/// Same as [`build_u_vector`] for real-valued cell counts.
pub fn u_vector_from_real_counts(counts: &[f64], global: &Marginals, n: usize) -> Result<UVector> {
    if n == 0 {
        return Err(Error::domain("client count must be at least 1"));
    }
    global.require_positive()?;
    if counts.len() != global.shape().cells() {
        return Err(Error::domain("count vector length does not match marginals"));
    }
    let n = n as f64;
    let values = counts
        .iter()
        .zip(global.expected_counts())
        .map(|(&v, e)| (v - e / n) / e.sqrt())
        .collect();
    UVector::new(values)
}
