//! Small statistics helpers: summaries, the two-sample Kolmogorov-Smirnov
//! test and ordinary least squares.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn std_error(xs: &[f64]) -> f64 {
    std_dev(xs) / (xs.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    /// Largest gap between the two empirical CDFs.
    pub statistic: f64,
    /// Asymptotic p-value.
    pub p_value: f64,
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic Kolmogorov
/// distribution (Stephens' small-sample adjustment of the argument).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("KS test needs two non-empty samples"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < na && j < nb {
        let x = a[i].min(b[j]);
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(KsResult { statistic: d, p_value: kolmogorov_sf(lambda) })
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let term = (-2.0 * (k as f64 * lambda).powi(2)).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
}

/// Least squares `y ~ X beta` through the SVD pseudo-inverse, so collinear
/// columns (e.g. a regressor held fixed across the sample) get the
/// minimum-norm solution instead of failing.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<LinearFit> {
    if rows.is_empty() || rows.len() != y.len() {
        return Err(Error::domain("design matrix and response differ in length"));
    }
    let p = rows[0].len();
    let x = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
    let yv = DVector::from_column_slice(y);
    let beta = x.clone().svd(true, true).solve(&yv, 1e-10).map_err(|e| Error::domain(e.to_string()))?;
    let fitted = &x * &beta;
    let ybar = mean(y);
    let ss_res: f64 = y.iter().zip(fitted.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|a| (a - ybar).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { if ss_res < 1e-12 { 1.0 } else { 0.0 } } else { 1.0 - ss_res / ss_tot };
    Ok(LinearFit { coefficients: beta.iter().copied().collect(), r_squared })
}

/// Simple regression `y = a + b x`.
pub fn simple_regression(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    least_squares(&x.iter().map(|&v| vec![1.0, v]).collect::<Vec<_>>(), y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn summaries() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert!((std_dev(&[1.0, 2.0, 3.0, 4.0]) - 1.2909944487358056).abs() < 1e-12);
        assert_eq!(std_dev(&[5.0]), 0.0);
    }

    #[test]
    fn kolmogorov_reference_points() {
        // Tabulated: P(K > 1.36) ~ 0.049, P(K > 1.63) ~ 0.010
        assert!((kolmogorov_sf(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_sf(1.628) - 0.01).abs() < 1e-3);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn ks_separates_shifted_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = Normal::new(0.0, 1.0).unwrap();
        let a: Vec<f64> = (0..500).map(|_| n.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..500).map(|_| n.sample(&mut rng)).collect();
        let c: Vec<f64> = (0..500).map(|_| n.sample(&mut rng) + 0.5).collect();
        assert!(ks_two_sample(&a, &b).unwrap().p_value > 0.05);
        assert!(ks_two_sample(&a, &c).unwrap().p_value < 1e-6);
        let same = ks_two_sample(&a, &a).unwrap();
        assert_eq!(same.statistic, 0.0);
    }

    #[test]
    fn least_squares_recovers_exact_plane_with_collinear_column() {
        let rows: Vec<Vec<f64>> = (0..9).map(|i| vec![1.0, (i % 3) as f64, 5.0, (i / 3) as f64]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 2.0 + 3.0 * r[1] + 10.0 + 7.0 * r[3]).collect();
        let fit = least_squares(&rows, &y).unwrap();
        assert!(fit.r_squared > 1.0 - 1e-12);
        assert!((fit.coefficients[1] - 3.0).abs() < 1e-9);
        assert!((fit.coefficients[3] - 7.0).abs() < 1e-9);
    }
}
