use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use super::codec::FieldVector;
use super::ka::SharedSeed;

/// Expands an edge seed into `len` residues mod 2^64.
///
/// The seed is hashed to a ChaCha20 key; `stream` selects an independent
/// keystream so one agreed seed can mask many aggregation rounds. Keystream
/// bytes are consumed eight at a time, little-endian.
pub fn expand_mask(seed: &SharedSeed, stream: u64, len: usize) -> FieldVector {
    let mut h = Sha256::new();
    h.update(b"fedchi/prg");
    h.update(seed.0);
    let key: [u8; 32] = h.finalize().into();
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream(stream);
    FieldVector::from_residues((0..len).map(|_| rng.next_u64()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_stream_separated() {
        let s = SharedSeed([7; 16]);
        assert_eq!(expand_mask(&s, 0, 64), expand_mask(&s, 0, 64));
        assert_eq!(expand_mask(&s, 0, 64).residues()[..10], expand_mask(&s, 0, 10).residues()[..]);
        let other = expand_mask(&s, 1, 64);
        let same = expand_mask(&s, 0, 64).residues().iter().zip(other.residues()).filter(|(a, b)| a == b).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn distinct_seeds_differ_almost_everywhere() {
        let a = expand_mask(&SharedSeed([1; 16]), 0, 10_000);
        let b = expand_mask(&SharedSeed([2; 16]), 0, 10_000);
        let differing = a.residues().iter().zip(b.residues()).filter(|(x, y)| x != y).count();
        assert!(differing as f64 >= 0.99 * 10_000.0);
    }

    #[test]
    fn byte_histogram_is_uniform() {
        // 10^6 bytes into 256 bins; chi-square with 255 dof. The 0.001 upper
        // critical value is 330.52.
        let v = expand_mask(&SharedSeed([9; 16]), 3, 125_000);
        let mut counts = [0u64; 256];
        for r in v.residues() {
            for b in r.to_le_bytes() {
                counts[b as usize] += 1;
            }
        }
        let expected = 1_000_000.0 / 256.0;
        let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(stat < 330.52, "{stat}");
    }
}
