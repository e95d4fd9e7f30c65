use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use super::projection::SketchVector;

/// `ell * ln((2/pi) Gamma(2/ell) Gamma(1 - 1/ell) sin(pi/ell))`, the log of the
/// denominator that makes the geometric mean of `|e_k|^(2/ell)` unbiased.
pub fn gm_log_correction(ell: usize) -> f64 {
    let l = ell as f64;
    l * ((2.0 / PI).ln() + ln_gamma(2.0 / l) + ln_gamma(1.0 - 1.0 / l) + (PI / l).sin().ln())
}

/// Geometric-mean estimate of the squared l2 norm carried by a sketch.
///
/// Evaluated in log space; the literal product of `ell` small powers
/// underflows long before `ell` gets large. Any exactly-zero coordinate makes
/// the product, and so the estimate, zero.
pub fn decode_gm(e: &SketchVector) -> f64 {
    let ell = e.len();
    if ell == 0 || e.values().contains(&0.0) {
        return 0.0;
    }
    let log_sum: f64 = e.values().iter().map(|v| v.abs().ln()).sum();
    (2.0 / ell as f64 * log_sum - gm_log_correction(ell)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contingency::UVector;
    use crate::sketch::{encode, sample_projection};

    fn mean_decode(u: &UVector, ell: usize, trials: u64, salt: u64) -> f64 {
        (0..trials)
            .map(|s| decode_gm(&encode(&sample_projection(ell, u.len(), s ^ (salt << 32)).unwrap(), u).unwrap()))
            .sum::<f64>()
            / trials as f64
    }

    #[test]
    fn zero_sketch_decodes_to_zero() {
        assert_eq!(decode_gm(&SketchVector::zeros(50)), 0.0);
        let mut v = vec![1.0; 20];
        v[3] = 0.0;
        assert_eq!(decode_gm(&SketchVector::new(v)), 0.0);
    }

    #[test]
    fn correction_matches_literal_product_for_moderate_ell() {
        for ell in [8usize, 20, 50] {
            let l = ell as f64;
            let c = (2.0 / PI) * statrs::function::gamma::gamma(2.0 / l) * statrs::function::gamma::gamma(1.0 - 1.0 / l) * (PI / l).sin();
            assert!((c.powf(l).ln() - gm_log_correction(ell)).abs() < 1e-9);
        }
    }

    #[test]
    fn subnormal_coordinates_stay_finite() {
        // The literal product would underflow to zero after a few factors;
        // half the coordinates are tiny and half huge, so the estimate is O(1).
        let v: Vec<f64> = (0..200).map(|k| if k % 2 == 0 { 1e-300 } else { 1e300 }).collect();
        let d = decode_gm(&SketchVector::new(v));
        assert!(d.is_finite() && d > 0.0);
        assert!((d.ln() + gm_log_correction(200)).abs() < 1e-6);
    }

    #[test]
    fn unbiased_across_norms() {
        // 10^4 trials; relative sd of a single estimate at ell = 50 is ~0.33,
        // so the mean's relative sd is ~0.33%.
        for (k, target) in [1.0f64, 100.0, 1e4].into_iter().enumerate() {
            let u = UVector::new(vec![target.sqrt() * 0.6, target.sqrt() * 0.8]).unwrap();
            let mean = mean_decode(&u, 50, 10_000, k as u64);
            assert!((mean / target - 1.0).abs() < 0.02, "{target}: {mean}");
        }
    }

    #[test]
    fn scale_equivariance() {
        let u = UVector::new(vec![1.0, -2.0, 0.5, 2.5]).unwrap();
        let base = u.squared_norm();
        for c in [2.0, 10.0] {
            let scaled = UVector::new(u.values().iter().map(|v| v * c).collect()).unwrap();
            let mean = mean_decode(&scaled, 50, 10_000, c as u64);
            assert!((mean / (c * c * base) - 1.0).abs() < 0.02, "c = {c}: {mean}");
        }
    }
}
