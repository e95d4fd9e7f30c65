use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::contingency::{ContingencyTable, Marginals};
use crate::error::{Error, Result};
use crate::sketch::ProjectionMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LeakageReport {
    pub rank: usize,
    pub nullity: usize,
    /// Constraint rows: projection rows plus `m_x + m_y` marginal rows.
    pub rows: usize,
    pub m: usize,
}

/// Stacks the projection rows (each column scaled by `weights`, if given)
/// on top of the row- and column-sum indicator rows.
pub fn constraint_matrix(p: Option<&ProjectionMatrix>, weights: Option<&[f64]>, m_x: usize, m_y: usize) -> DMatrix<f64> {
    let m = m_x * m_y;
    let ell = p.map_or(0, ProjectionMatrix::ell);
    let mut a = DMatrix::zeros(ell + m_x + m_y, m);
    if let Some(p) = p {
        for k in 0..ell {
            for (c, &v) in p.row(k).iter().enumerate() {
                a[(k, c)] = v * weights.map_or(1.0, |w| w[c]);
            }
        }
    }
    for x in 0..m_x {
        for y in 0..m_y {
            a[(ell + x, x * m_y + y)] = 1.0;
            a[(ell + m_x + y, x * m_y + y)] = 1.0;
        }
    }
    a
}

fn numerical_rank(singular: &[f64], rows: usize, cols: usize) -> usize {
    let max = singular.iter().copied().fold(0.0, f64::max);
    let tol = max * rows.max(cols) as f64 * f64::EPSILON;
    singular.iter().filter(|&&s| s > tol).count()
}

/// Rank and null-space dimension of what the server learns about the
/// flattened global table: the sketch constraints and the marginals. With
/// `p = None` only the marginal rows are used.
pub fn leakage_rank_check(p: Option<&ProjectionMatrix>, m_x: usize, m_y: usize) -> LeakageReport {
    let a = constraint_matrix(p, None, m_x, m_y);
    let (rows, m) = a.shape();
    let sv = a.singular_values();
    let rank = numerical_rank(sv.as_slice(), rows, m);
    LeakageReport { rank, nullity: m - rank, rows, m }
}

/// A second, real-valued global table indistinguishable from `table` to the
/// server: same marginals, same aggregate sketch.
#[derive(Debug, Clone)]
pub struct NullSpaceTwin {
    pub counts: Vec<f64>,
    /// Unit null-space direction that was added.
    pub direction: Vec<f64>,
    pub step: f64,
}

/// Moves `table` along a random direction in the null space of the leaked
/// linear system. The aggregate sketch is `P D (V - E)` with
/// `D = diag(1/sqrt(E))`, so the direction is taken from the null space of
/// `[P D; marginal rows]`. The step keeps every cell positive.
pub fn null_space_twin(table: &ContingencyTable, marginals: &Marginals, p: &ProjectionMatrix, seed: u64) -> Result<NullSpaceTwin> {
    marginals.require_positive()?;
    let (m_x, m_y) = (table.rows(), table.cols());
    let m = m_x * m_y;
    if p.m() != m {
        return Err(Error::domain("projection does not match the table size"));
    }
    let weights: Vec<f64> = marginals.expected_counts().iter().map(|e| 1.0 / e.sqrt()).collect();
    let a = constraint_matrix(Some(p), Some(&weights), m_x, m_y);
    let (rows, _) = a.shape();
    if rows >= m {
        return Err(Error::Precondition("hiding condition fails: the leaked system has no null space".into()));
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let rank = numerical_rank(svd.singular_values.as_slice(), rows, m);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
    // Project out the row space; twice for numerical hygiene.
    for _ in 0..2 {
        for (r, s) in v_t.row_iter().zip(svd.singular_values.iter()).take(rows) {
            if *s <= 0.0 || rank == 0 {
                continue;
            }
            let dot: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            for (zi, ri) in z.iter_mut().zip(r.iter()) {
                *zi -= dot * ri;
            }
        }
    }
    let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    z.iter_mut().for_each(|v| *v /= norm);

    let counts: Vec<f64> = table.counts().iter().map(|&v| v as f64).collect();
    let min_cell = counts.iter().copied().fold(f64::INFINITY, f64::min);
    let max_dir = z.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let step = if min_cell > 0.0 { 0.5 * min_cell / max_dir } else { 1.0 };
    let twin = counts.iter().zip(&z).map(|(c, d)| c + step * d).collect();
    Ok(NullSpaceTwin { counts: twin, direction: z, step })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contingency::{chi2_from_real_counts, chi2_statistic, synth_dataset, u_vector_from_real_counts, SynthKind, SynthRecipe};
    use crate::sketch::{decode_gm, encode, sample_projection};

    #[test]
    fn marginal_rows_alone_have_rank_mx_plus_my_minus_one() {
        let r = leakage_rank_check(None, 20, 20);
        assert_eq!(r.rank, 39);
        assert_eq!(r.nullity, 400 - 39);
        let r = leakage_rank_check(None, 3, 7);
        assert_eq!(r.rank, 9);
    }

    #[test]
    fn twenty_by_twenty_at_ell_50_leaves_large_null_space() {
        let p = sample_projection(50, 400, 17).unwrap();
        let r = leakage_rank_check(Some(&p), 20, 20);
        assert!(r.rank <= 90);
        assert!(r.nullity >= 310);
    }

    #[test]
    fn twin_table_has_same_marginals_and_sketch() {
        let table = synth_dataset(SynthKind::Independent, 20, 20, 40_000, 3, &SynthRecipe::default()).unwrap();
        let marg = table.marginals();
        let p = sample_projection(50, 400, 5).unwrap();
        let twin = null_space_twin(&table, &marg, &p, 11).unwrap();
        assert!(twin.counts.iter().all(|&c| c > 0.0));

        for x in 0..20 {
            let row: f64 = twin.counts[x * 20..(x + 1) * 20].iter().sum();
            assert!((row - marg.row_sums[x] as f64).abs() < 1e-8);
        }
        let original: Vec<f64> = table.counts().iter().map(|&v| v as f64).collect();
        let e1 = encode(&p, &u_vector_from_real_counts(&original, &marg, 1).unwrap()).unwrap();
        let e2 = encode(&p, &u_vector_from_real_counts(&twin.counts, &marg, 1).unwrap()).unwrap();
        for (a, b) in e1.values().iter().zip(e2.values()) {
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{a} vs {b}");
        }
        let (d1, d2) = (decode_gm(&e1), decode_gm(&e2));
        assert!((d1 - d2).abs() <= 1e-9 * d1);
        // ...while the tables, and their statistics, differ.
        let moved = original.iter().zip(&twin.counts).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(moved > 10.0, "{moved}");
        let s1 = chi2_statistic(&table).unwrap();
        let s2 = chi2_from_real_counts(&twin.counts, &marg).unwrap();
        assert!((s1 - s2).abs() > 1e-3 * s1);
    }
}
