//! Caesar-cipher cryptanalysis with federated chi-square tests.
//!
//! For each candidate shift `s` the clients build a 26x26 table whose rows
//! are letters and whose columns are 13 position classes of the ciphertext
//! decrypted under `s` followed by 13 position classes of a reference
//! English sample. Under the right shift every column follows English letter
//! frequencies, so the table is close to homogeneous and the statistic is
//! near its degrees of freedom; under a wrong shift the ciphertext columns
//! follow a rotated distribution and the statistic is far larger. The
//! recovered shift is the one whose decryption is most consistent with
//! English, i.e. the smallest estimated statistic.

use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contingency::ContingencyTable;
use crate::error::{Error, Result};
use crate::protocol::{fed_chi2, ProtocolConfig};
use crate::seed::derive;

pub const ALPHABET: usize = 26;
/// Position classes per text; two texts give 26 columns.
const GROUPS: usize = 13;

const FREQUENCY_CSV: &str = include_str!("../../data/english_letter_frequencies.csv");

/// Lower-cases ASCII letters to `0..26` and drops everything else.
pub fn normalize(text: &str) -> Vec<u8> {
    text.bytes().filter(u8::is_ascii_alphabetic).map(|b| b.to_ascii_lowercase() - b'a').collect()
}

pub fn letters_to_string(letters: &[u8]) -> String {
    letters.iter().map(|&l| (b'a' + l) as char).collect()
}

pub fn encrypt(letters: &[u8], shift: u8) -> Vec<u8> {
    letters.iter().map(|&l| (l + shift % 26) % 26).collect()
}

pub fn decrypt(letters: &[u8], shift: u8) -> Vec<u8> {
    encrypt(letters, (26 - shift % 26) % 26)
}

pub fn encrypt_str(text: &str, shift: u8) -> String {
    letters_to_string(&encrypt(&normalize(text), shift))
}

/// Relative letter frequencies of English from the bundled table.
pub fn english_frequencies() -> [f64; ALPHABET] {
    let mut out = [0.0; ALPHABET];
    for line in FREQUENCY_CSV.lines().skip(1) {
        let (letter, pct) = line.split_once(',').expect("bundled table is two columns");
        out[(letter.as_bytes()[0] - b'a') as usize] = pct.trim().parse::<f64>().expect("bundled table is numeric");
    }
    let total: f64 = out.iter().sum();
    out.map(|p| p / total)
}

/// I.i.d. letters with English frequencies.
pub fn sample_english(len: usize, seed: u64) -> Vec<u8> {
    let dist = WeightedIndex::new(english_frequencies()).expect("positive weights");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| dist.sample(&mut rng) as u8).collect()
}

pub fn load_plaintext(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    Ok(normalize(&std::fs::read_to_string(path)?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CipherTrial {
    pub ciphertext: Vec<u8>,
    /// English sample the ciphertext is compared against.
    pub reference: Vec<u8>,
}

impl CipherTrial {
    pub fn new(ciphertext: Vec<u8>, reference: Vec<u8>) -> Result<Self> {
        if ciphertext.is_empty() || reference.is_empty() {
            return Err(Error::domain("ciphertext and reference must be non-empty"));
        }
        if ciphertext.iter().chain(&reference).any(|&l| l as usize >= ALPHABET) {
            return Err(Error::domain("letters must lie in 0..26"));
        }
        Ok(Self { ciphertext, reference })
    }

    pub fn len(&self) -> usize {
        self.ciphertext.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ciphertext.is_empty()
    }

    pub fn reference_counts(&self) -> [u64; ALPHABET] {
        let mut c = [0; ALPHABET];
        for &l in &self.reference {
            c[l as usize] += 1;
        }
        c
    }
}

fn segment(len: usize, n: usize, i: usize) -> std::ops::Range<usize> {
    (i * len / n)..((i + 1) * len / n)
}

/// Per-client tables for candidate `shift`. Client `i` holds the `i`-th
/// contiguous segment of the ciphertext and of the reference. Client 0 also
/// contributes one pseudo-count per cell so no marginal can be zero.
pub fn client_tables(trial: &CipherTrial, shift: u8, n: usize) -> Result<Vec<ContingencyTable>> {
    let mut tables = Vec::with_capacity(n);
    for i in 0..n {
        let mut t = ContingencyTable::from_counts(ALPHABET, ALPHABET, vec![(i == 0) as i64; ALPHABET * ALPHABET])?;
        let cipher = segment(trial.ciphertext.len(), n, i);
        for pos in cipher {
            let plain = (trial.ciphertext[pos] + 26 - shift % 26) % 26;
            t.add_to(plain as usize, pos % GROUPS, 1);
        }
        for pos in segment(trial.reference.len(), n, i) {
            t.add_to(trial.reference[pos] as usize, GROUPS + pos % GROUPS, 1);
        }
        tables.push(t);
    }
    Ok(tables)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaesarOutcome {
    pub shift: u8,
    /// Federated estimate for each candidate shift.
    pub scores: Vec<f64>,
}

/// Runs one federated test per candidate shift and returns the shift whose
/// decryption agrees best with English.
pub fn crack_caesar(trial: &CipherTrial, config: &ProtocolConfig) -> Result<CaesarOutcome> {
    let base = ProtocolConfig { m_x: ALPHABET, m_y: ALPHABET, ..config.clone() };
    let scores = (0..ALPHABET as u8)
        .map(|s| {
            let mut cfg = base.clone();
            cfg.seeds.projection = derive(config.seeds.projection, &[s as u64]);
            fed_chi2(&client_tables(trial, s, cfg.n)?, &cfg).map(|o| o.estimate)
        })
        .collect::<Result<Vec<_>>>()?;
    let shift = scores.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(s, _)| s as u8).unwrap();
    Ok(CaesarOutcome { shift, scores })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaesarParams {
    /// Ciphertext length `L`.
    pub length: usize,
    /// Number of non-overlapping ciphertexts.
    pub trials: usize,
    /// Plain-text source; English is sampled from the bundled letter
    /// frequencies when absent.
    pub plaintext: Option<PathBuf>,
}

impl Default for CaesarParams {
    fn default() -> Self {
        Self { length: 100_000, trials: 10, plaintext: None }
    }
}

/// Success rate of [`crack_caesar`] for `config.ell`, each trial with a
/// random shift.
pub fn caesar_success_rate(params: &CaesarParams, config: &ProtocolConfig, seed: u64) -> Result<f64> {
    let (l, trials) = (params.length, params.trials);
    let (plain, reference) = match &params.plaintext {
        Some(path) => {
            let text = load_plaintext(path)?;
            if text.len() < (trials + 1) * l {
                return Err(Error::config(format!("{} holds {} letters, need {}", path.display(), text.len(), (trials + 1) * l)));
            }
            let reference = text[trials * l..(trials + 1) * l].to_vec();
            (text, vec![reference; trials])
        }
        None => (sample_english(trials * l, derive(seed, &[0])), (0..trials).map(|t| sample_english(l, derive(seed, &[1, t as u64]))).collect()),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, &[2]));
    let shifts: Vec<u8> = (0..trials).map(|_| rng.random_range(0..26)).collect();
    let hits = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trial = CipherTrial::new(encrypt(&plain[t * l..(t + 1) * l], shifts[t]), reference[t].clone())?;
            let mut cfg = config.clone();
            cfg.seeds.projection = derive(seed, &[3, t as u64, config.ell as u64]);
            Ok((crack_caesar(&trial, &cfg)?.shift == shifts[t]) as usize)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(hits.iter().sum::<usize>() as f64 / trials as f64)
}
