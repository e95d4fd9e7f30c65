//! Synthetic joint distributions: X uniform on [0, 1), Y = f(X) + noise,
//! both binned into equal-width bins over [0, 1].

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::table::ContingencyTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthKind {
    /// Y drawn uniformly, independent of X.
    Independent,
    /// f(x) = x
    Linear,
    /// f(x) = (2x - 1)^2
    Quadratic,
    /// Logistic curve centred at 0.5, rescaled onto [0, 1].
    Logistic,
}

impl SynthKind {
    pub const ALL: [SynthKind; 4] = [SynthKind::Independent, SynthKind::Linear, SynthKind::Quadratic, SynthKind::Logistic];

    pub fn name(&self) -> &'static str {
        match self {
            SynthKind::Independent => "independent",
            SynthKind::Linear => "linear",
            SynthKind::Quadratic => "quadratic",
            SynthKind::Logistic => "logistic",
        }
    }

    fn relation(&self, x: f64, steepness: f64) -> f64 {
        match self {
            SynthKind::Independent => unreachable!("independent kind draws y directly"),
            SynthKind::Linear => x,
            SynthKind::Quadratic => (2.0 * x - 1.0).powi(2),
            SynthKind::Logistic => {
                let s = |t: f64| 1.0 / (1.0 + (-steepness * (t - 0.5)).exp());
                (s(x) - s(0.0)) / (s(1.0) - s(0.0))
            }
        }
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SynthKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Unknown { kind: "dataset", name: s.to_string(), available: "independent, linear, quadratic, logistic".into() })
    }
}

impl std::fmt::Display for SynthKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Generator knobs. Every relation maps [0, 1] onto [0, 1], so the noise
/// standard deviation is `noise_fraction` times the unit range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthRecipe {
    pub noise_fraction: f64,
    pub logistic_steepness: f64,
}

impl Default for SynthRecipe {
    fn default() -> Self {
        Self { noise_fraction: 0.1, logistic_steepness: 10.0 }
    }
}

fn bin(value: f64, bins: usize) -> usize {
    ((value * bins as f64).floor().max(0.0) as usize).min(bins - 1)
}

/// Zero-based `(x_bin, y_bin)` observations.
pub fn synth_pairs(kind: SynthKind, m_x: usize, m_y: usize, samples: usize, seed: u64, recipe: &SynthRecipe) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = (recipe.noise_fraction > 0.0).then(|| Normal::new(0.0, recipe.noise_fraction).expect("finite sigma"));
    (0..samples)
        .map(|_| {
            let x: f64 = rng.random();
            let y = match kind {
                SynthKind::Independent => rng.random(),
                _ => kind.relation(x, recipe.logistic_steepness) + noise.map_or(0.0, |n| n.sample(&mut rng)),
            };
            (bin(x, m_x), bin(y, m_y))
        })
        .collect()
}

pub fn synth_dataset(kind: SynthKind, m_x: usize, m_y: usize, samples: usize, seed: u64, recipe: &SynthRecipe) -> Result<ContingencyTable> {
    if samples == 0 {
        return Err(Error::domain("samples must be at least 1"));
    }
    let mut table = ContingencyTable::zeros(m_x, m_y)?;
    for (x, y) in synth_pairs(kind, m_x, m_y, samples, seed, recipe) {
        table.add_to(x, y, 1);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contingency::chi2_statistic;

    #[test]
    fn deterministic_per_seed() {
        let r = SynthRecipe::default();
        let a = synth_dataset(SynthKind::Quadratic, 6, 5, 2000, 42, &r).unwrap();
        let b = synth_dataset(SynthKind::Quadratic, 6, 5, 2000, 42, &r).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.marginals().total, 2000);
        let c = synth_dataset(SynthKind::Quadratic, 6, 5, 2000, 43, &r).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn noiseless_linear_is_diagonal() {
        let r = SynthRecipe { noise_fraction: 0.0, ..Default::default() };
        let t = synth_dataset(SynthKind::Linear, 8, 8, 5000, 1, &r).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                if i != j {
                    assert_eq!(t.get(i, j), 0);
                }
            }
        }
    }

    #[test]
    fn independent_statistic_near_dof() {
        // Under independence the statistic is approximately chi-square with
        // dof = 81 (mean 81, sd ~12.7); 5 sd is a generous envelope.
        let t = synth_dataset(SynthKind::Independent, 10, 10, 200_000, 3, &SynthRecipe::default()).unwrap();
        let s = chi2_statistic(&t).unwrap();
        assert!(s < 81.0 + 5.0 * (2.0f64 * 81.0).sqrt(), "{s}");
    }

    #[test]
    fn correlated_kinds_are_far_from_independent() {
        for kind in [SynthKind::Linear, SynthKind::Quadratic, SynthKind::Logistic] {
            let t = synth_dataset(kind, 10, 10, 20_000, 5, &SynthRecipe::default()).unwrap();
            assert!(chi2_statistic(&t).unwrap() > 10_000.0, "{kind}");
        }
    }

    #[test]
    fn parse_kind() {
        assert_eq!("logistic".parse::<SynthKind>().unwrap(), SynthKind::Logistic);
        assert!("cubic".parse::<SynthKind>().is_err());
    }
}
