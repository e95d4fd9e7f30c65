use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::secagg::{aggregators, key_agreements};
use crate::sketch::MIN_ELL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarginalMode {
    /// One aggregation for all row sums and one for all column sums.
    Batched,
    /// One aggregation per row and per column sum.
    PerCoordinate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub graph: u64,
    pub projection: u64,
    pub key_agreement: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self { graph: 1, projection: 2, key_agreement: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Number of clients.
    pub n: usize,
    /// Encoding size.
    pub ell: usize,
    pub m_x: usize,
    pub m_y: usize,
    /// Fixed-point scale is `2^scale_bits`.
    pub scale_bits: u32,
    pub seeds: Seeds,
    /// Level of the downstream yes/no decision.
    pub significance: f64,
    /// Send the projection seed instead of the matrix.
    pub broadcast_by_seed: bool,
    pub key_agreement: String,
    pub aggregator: String,
    pub marginal_mode: MarginalMode,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            n: 10,
            ell: 50,
            m_x: 20,
            m_y: 20,
            scale_bits: crate::secagg::DEFAULT_SCALE_BITS,
            seeds: Seeds::default(),
            significance: 0.05,
            broadcast_by_seed: false,
            key_agreement: "x25519".into(),
            aggregator: "secure".into(),
            marginal_mode: MarginalMode::Batched,
        }
    }
}

impl ProtocolConfig {
    pub fn m(&self) -> usize {
        self.m_x * self.m_y
    }

    pub fn dof(&self) -> usize {
        (self.m_x - 1) * (self.m_y - 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("n must be at least 1"));
        }
        if self.m_x < 2 || self.m_y < 2 {
            return Err(Error::config(format!("table must be at least 2x2, got {}x{}", self.m_x, self.m_y)));
        }
        if self.ell < MIN_ELL {
            return Err(Error::config(format!("ell = {} is below the minimum {MIN_ELL}", self.ell)));
        }
        if self.m() <= self.m_x + self.m_y + self.ell {
            return Err(Error::config(format!(
                "hiding condition violated: m = {} must exceed m_x + m_y + ell = {}",
                self.m(),
                self.m_x + self.m_y + self.ell
            )));
        }
        if self.scale_bits > 52 {
            return Err(Error::config(format!("scale_bits = {} exceeds 52", self.scale_bits)));
        }
        if !(self.significance > 0.0 && self.significance < 1.0) {
            return Err(Error::config(format!("significance must lie in (0, 1), got {}", self.significance)));
        }
        key_agreements().get(&self.key_agreement)?;
        aggregators().get(&self.aggregator)?;
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Every parameter and seed on one line, for CSV headers.
    pub fn fingerprint(&self) -> String {
        format!(
            "n={} ell={} m_x={} m_y={} scale_bits={} seed.graph={} seed.projection={} seed.key_agreement={} significance={} broadcast_by_seed={} key_agreement={} aggregator={} marginal_mode={}",
            self.n,
            self.ell,
            self.m_x,
            self.m_y,
            self.scale_bits,
            self.seeds.graph,
            self.seeds.projection,
            self.seeds.key_agreement,
            self.significance,
            self.broadcast_by_seed,
            self.key_agreement,
            self.aggregator,
            match self.marginal_mode {
                MarginalMode::Batched => "batched",
                MarginalMode::PerCoordinate => "per-coordinate",
            }
        )
    }
}
