use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::contingency::UVector;
use crate::error::{Error, Result};

/// Smallest supported encoding size. Below this the bias correction
/// `Gamma(1 - 1/l) sin(pi / l)` is badly conditioned.
pub const MIN_ELL: usize = 8;

/// An `ell x m` matrix of i.i.d. `N(0, 2)` entries, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    ell: usize,
    m: usize,
    seed: u64,
    entries: Vec<f64>,
}

impl ProjectionMatrix {
    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.entries[k * self.m..(k + 1) * self.m]
    }

    /// Serialized size when broadcast by value (little-endian f64s).
    pub fn byte_len(&self) -> usize {
        self.entries.len() * 8
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.entries.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    pub fn from_bytes(ell: usize, m: usize, seed: u64, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != ell * m * 8 {
            return Err(Error::protocol(format!("projection payload is {} bytes, expected {}", bytes.len(), ell * m * 8)));
        }
        let entries = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Self { ell, m, seed, entries })
    }
}

pub fn sample_projection(ell: usize, m: usize, seed: u64) -> Result<ProjectionMatrix> {
    if ell < MIN_ELL {
        return Err(Error::config(format!("encoding size {ell} is below the minimum {MIN_ELL}")));
    }
    if m == 0 {
        return Err(Error::config("projection input dimension must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = std::f64::consts::SQRT_2;
    let entries = (0..ell * m)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            scale * z
        })
        .collect();
    Ok(ProjectionMatrix { ell, m, seed, entries })
}

/// A length-`ell` encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchVector(Vec<f64>);

impl SketchVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(ell: usize) -> Self {
        Self(vec![0.0; ell])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add_assign(&mut self, other: &SketchVector) {
        assert_eq!(self.len(), other.len(), "sketch length mismatch");
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }
}

/// `P * u`.
pub fn encode(p: &ProjectionMatrix, u: &UVector) -> Result<SketchVector> {
    if u.len() != p.m {
        return Err(Error::domain(format!("u has dimension {} but the projection expects {}", u.len(), p.m)));
    }
    let u = u.values();
    let values = (0..p.ell)
        .map(|k| p.row(k).iter().zip(u).map(|(a, b)| a * b).sum())
        .collect();
    Ok(SketchVector(values))
}
