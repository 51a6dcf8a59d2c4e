use crate::error::{arg, Result};

use super::eigen::Spectrum;

/// All elementary symmetric polynomials `e_0 = 1, e_1, …, e_n` of `lambda`.
///
/// Expands the coefficients of `∏ (1 + λ_i t)` one factor at a time.
pub fn sigma_all(lambda: &[f64]) -> Vec<f64> {
    let n = lambda.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for (i, &l) in lambda.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            e[j] += l * e[j - 1];
        }
    }
    e
}

/// `σ_k(λ)` for `1 ≤ k ≤ n`.
pub fn sigma_k(lambda: &Spectrum, k: usize) -> Result<f64> {
    sigma_k_slice(lambda.values(), k)
}

pub fn sigma_k_slice(lambda: &[f64], k: usize) -> Result<f64> {
    let n = lambda.len();
    if k == 0 || k > n {
        return arg(format!("sigma_k: k = {k} outside 1..={n}"));
    }
    Ok(sigma_all(lambda)[k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(lambda: &[f64], k: usize) -> f64 {
        let n = lambda.len();
        let mut total = 0.0;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize == k {
                total += (0..n).filter(|i| mask & (1 << i) != 0).map(|i| lambda[i]).product::<f64>();
            }
        }
        total
    }

    #[test]
    fn small_values() {
        let s = Spectrum::new(vec![1.0, 2.0, 3.0]);
        assert_eq!(sigma_k(&s, 1).unwrap(), 6.0);
        assert_eq!(sigma_k(&s, 2).unwrap(), 11.0);
        assert_eq!(sigma_k(&Spectrum::new(vec![1.0; 3]), 3).unwrap(), 1.0);
    }

    #[test]
    fn k_out_of_range() {
        let s = Spectrum::new(vec![1.0, 2.0]);
        assert!(sigma_k(&s, 0).is_err());
        assert!(sigma_k(&s, 3).is_err());
    }

    proptest! {
        #[test]
        fn matches_enumeration(lambda in prop::collection::vec(-5.0f64..5.0, 2..=8)) {
            let e = sigma_all(&lambda);
            for k in 1..=lambda.len() {
                let b = brute(&lambda, k);
                let scale: f64 = 1.0 + brute(&lambda.iter().map(|v| v.abs()).collect::<Vec<_>>(), k);
                prop_assert!((e[k] - b).abs() <= 1e-12 * scale, "k={k}: {} vs {b}", e[k]);
            }
        }
    }
}
