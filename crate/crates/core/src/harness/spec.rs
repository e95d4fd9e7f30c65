use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::apps::caesar::CaesarParams;
use crate::apps::fdr::FdrParams;
use crate::apps::featsel::CorpusParams;
use crate::contingency::{SynthKind, SynthRecipe};
use crate::error::{Error, Result};
use crate::protocol::ProtocolConfig;

/// Grid axes. Each experiment reads the axes it sweeps and ignores the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    /// Client counts.
    pub n: Vec<usize>,
    /// Encoding sizes.
    pub ell: Vec<usize>,
    /// Ciphertext lengths.
    pub length: Vec<usize>,
    pub datasets: Vec<SynthKind>,
    /// Square table sides for the encoding-time sweep.
    pub side: Vec<usize>,
    /// Independent replicates (seeds) per grid point.
    pub replicates: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            n: vec![10, 100, 1000],
            ell: vec![10, 20, 50, 100, 200],
            length: vec![1000, 10_000, 100_000],
            datasets: SynthKind::ALL.to_vec(),
            side: vec![50, 100, 150, 200, 250, 300],
            replicates: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Registered experiment name.
    pub command: String,
    /// Root seed; every grid point derives its own seeds from it.
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// Protocol runs per grid point.
    pub runs: usize,
    /// Observations per synthetic dataset.
    pub samples: usize,
    /// Features kept by feature selection.
    pub top_k: usize,
    /// Repeats per encoding-time measurement; the minimum is reported.
    pub timing_repeats: usize,
    pub protocol: ProtocolConfig,
    pub grid: Grid,
    pub synth: SynthRecipe,
    pub caesar: CaesarParams,
    pub fdr: FdrParams,
    pub featsel: CorpusParams,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            command: "accuracy-sweep".into(),
            seed: 0,
            output: None,
            runs: 10,
            samples: 10_000,
            top_k: 50,
            timing_repeats: 5,
            protocol: ProtocolConfig::default(),
            grid: Grid::default(),
            synth: SynthRecipe::default(),
            caesar: CaesarParams::default(),
            fdr: FdrParams::default(),
            featsel: CorpusParams::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        let empty = [("grid.n", g.n.is_empty()), ("grid.ell", g.ell.is_empty()), ("grid.length", g.length.is_empty()), ("grid.datasets", g.datasets.is_empty()), ("grid.side", g.side.is_empty())];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::config(format!("{name} must not be empty")));
        }
        self.protocol.validate()?;
        for &ell in &g.ell {
            crate::protocol::ProtocolConfig { ell, ..self.protocol.clone() }.validate()?;
        }
        if self.runs == 0 || g.replicates == 0 || self.timing_repeats == 0 {
            return Err(Error::config("runs, grid.replicates and timing_repeats must be positive"));
        }
        if let Some(out) = &self.output {
            let parent = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            if !parent.is_dir() {
                return Err(Error::config(format!("output directory {} does not exist", parent.display())));
            }
        }
        Ok(())
    }

    /// Every parameter and seed on one line, for CSV headers. The output
    /// path is left out.
    pub fn fingerprint(&self) -> String {
        let text = toml::to_string(&Self { output: None, ..self.clone() }).unwrap_or_default();
        let mut section = String::new();
        let mut parts = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = format!("{name}.");
            } else {
                parts.push(format!("{section}{}", line.replace(" = ", "=")));
            }
        }
        parts.join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_fingerprints() {
        let spec = ExperimentSpec::from_toml_str("command = \"caesar\"\nseed = 4\n[grid]\nell = [10, 30]\n[protocol]\nn = 5\n").unwrap();
        assert_eq!(spec.grid.ell, vec![10, 30]);
        assert_eq!(spec.protocol.n, 5);
        let fp = spec.fingerprint();
        assert!(fp.contains("seed=4"));
        assert!(fp.contains("protocol.n=5"));
        assert!(fp.contains("grid.ell=[10, 30]"));
        assert!(!fp.contains('\n'));
    }

    #[test]
    fn rejects_empty_grids_and_bad_paths() {
        assert!(ExperimentSpec::from_toml_str("[grid]\nn = []").unwrap_err().is_config());
        assert!(ExperimentSpec::from_toml_str("output = \"/definitely/not/here/x.csv\"").unwrap_err().is_config());
        assert!(ExperimentSpec::from_toml_str("unknown = 1").unwrap_err().is_config());
    }
}
