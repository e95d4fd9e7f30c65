//! Chi-square feature selection on a synthetic labelled corpus.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contingency::{chi2_statistic, split_across_clients, ContingencyTable};
use crate::error::{Error, Result};
use crate::protocol::{fed_chi2, ProtocolConfig};
use crate::seed::derive;

/// Indices of the `k` largest scores, best first; ties go to the lower index.
pub fn select_features(scores: &[f64], k: usize) -> Result<Vec<usize>> {
    if k > scores.len() {
        return Err(Error::domain(format!("cannot select {k} of {} features", scores.len())));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(k);
    Ok(idx)
}

/// Corpus generator. Each document has a uniform class label; an
/// informative feature copies a class-dependent bin with probability
/// `strength` (drawn per feature) and is uniform otherwise; an uninformative
/// feature is always uniform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusParams {
    pub features: usize,
    pub informative: usize,
    pub classes: usize,
    pub bins: usize,
    pub documents: usize,
    pub min_strength: f64,
    pub max_strength: f64,
}

impl Default for CorpusParams {
    fn default() -> Self {
        Self { features: 200, informative: 50, classes: 20, bins: 20, documents: 5000, min_strength: 0.15, max_strength: 0.4 }
    }
}

#[derive(Debug, Clone)]
pub struct Corpus {
    /// Per feature, the `bins x classes` table over all documents.
    pub tables: Vec<ContingencyTable>,
    pub informative: Vec<bool>,
}

pub fn synth_corpus(params: &CorpusParams, seed: u64) -> Result<Corpus> {
    if params.informative > params.features {
        return Err(Error::config("more informative features than features"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut informative = vec![false; params.features];
    let mut order: Vec<usize> = (0..params.features).collect();
    order.shuffle(&mut rng);
    for &f in &order[..params.informative] {
        informative[f] = true;
    }
    let labels: Vec<usize> = (0..params.documents).map(|_| rng.random_range(0..params.classes)).collect();
    let mut tables = Vec::with_capacity(params.features);
    for &inf in &informative {
        let mut t = ContingencyTable::zeros(params.bins, params.classes)?;
        let strength = if inf { rng.random_range(params.min_strength..params.max_strength) } else { 0.0 };
        let class_bin: Vec<usize> = (0..params.classes).map(|_| rng.random_range(0..params.bins)).collect();
        for &c in &labels {
            let bin = if rng.random::<f64>() < strength { class_bin[c] } else { rng.random_range(0..params.bins) };
            t.add_to(bin, c, 1);
        }
        tables.push(t);
    }
    Ok(Corpus { tables, informative })
}

#[derive(Debug, Clone)]
pub struct FeatselOutcome {
    pub federated_scores: Vec<f64>,
    pub oracle_scores: Vec<f64>,
    pub federated_top: Vec<usize>,
    pub oracle_top: Vec<usize>,
    /// Fraction of the oracle's top-k also selected federatedly.
    pub overlap: f64,
}

/// Scores every feature with the protocol (documents split at random across
/// `config.n` clients) and with the centralized statistic, then compares the
/// top-`k` sets.
pub fn featsel_experiment(params: &CorpusParams, config: &ProtocolConfig, k: usize, seed: u64) -> Result<FeatselOutcome> {
    let corpus = synth_corpus(params, seed)?;
    let cfg = ProtocolConfig { m_x: params.bins, m_y: params.classes, ..config.clone() };
    let federated_scores = corpus
        .tables
        .par_iter()
        .enumerate()
        .map(|(f, t)| {
            let clients = split_across_clients(t, cfg.n, derive(seed, &[1, f as u64]));
            let mut c = cfg.clone();
            c.seeds.projection = derive(seed, &[2, f as u64]);
            fed_chi2(&clients, &c).map(|o| o.estimate)
        })
        .collect::<Result<Vec<_>>>()?;
    let oracle_scores = corpus.tables.iter().map(chi2_statistic).collect::<Result<Vec<_>>>()?;
    let federated_top = select_features(&federated_scores, k)?;
    let oracle_top = select_features(&oracle_scores, k)?;
    let hits = oracle_top.iter().filter(|f| federated_top.contains(f)).count();
    Ok(FeatselOutcome { federated_scores, oracle_scores, federated_top, oracle_top, overlap: hits as f64 / k.max(1) as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_basics() {
        let scores = [3.0, 9.0, 1.0, 9.0, 5.0];
        assert_eq!(select_features(&scores, 3).unwrap(), vec![1, 3, 4]);
        let mut all = select_features(&scores, 5).unwrap();
        all.sort();
        assert_eq!(all, vec![0, 1, 2, 3, 4]);
        let scaled: Vec<f64> = scores.iter().map(|s| s * 7.5).collect();
        assert_eq!(select_features(&scaled, 3).unwrap(), select_features(&scores, 3).unwrap());
        assert!(select_features(&scores, 6).is_err());
    }

    #[test]
    fn informative_features_dominate_the_oracle() {
        let params = CorpusParams::default();
        let c = synth_corpus(&params, 1).unwrap();
        let scores: Vec<f64> = c.tables.iter().map(|t| chi2_statistic(t).unwrap()).collect();
        let top = select_features(&scores, params.informative).unwrap();
        assert!(top.iter().all(|&f| c.informative[f]));
    }
}
