//! Small numeric helpers shared across modules.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::{Error, Result};

/// `ln Σ exp(x_i)`; `-inf` for an empty input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Gaussian tail probability `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Uncoded BPSK bit error rate over AWGN, `Q(√(2 Eb/N0))`.
pub fn bpsk_awgn_ber(ebn0_db: f64) -> f64 {
    if ebn0_db == f64::INFINITY {
        return 0.0;
    }
    q_function((2.0 * 10f64.powf(ebn0_db / 10.0)).sqrt())
}

/// Quantile of the chi-square distribution with `dof` degrees of freedom.
pub fn chi_square_quantile(dof: usize, p: f64) -> Result<f64> {
    if dof == 0 {
        return Err(Error::invalid(
            "chi-square needs at least one degree of freedom",
        ));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("probability {p} outside (0, 1)")));
    }
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(dist.inverse_cdf(p))
}

/// Sample mean and unbiased standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse_matches_naive() {
        let v = [0.1, -2.0, 3.5];
        let naive: f64 = v.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&v) - naive).abs() < 1e-14);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        // Survives magnitudes that overflow exp().
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn q_function_values() {
        assert!((q_function(0.0) - 0.5).abs() < 1e-15);
        // Q(√2) evaluated independently in extended precision.
        assert!((bpsk_awgn_ber(0.0) - 0.078_649_603_525_142_51).abs() < 1e-15);
        let grid: Vec<f64> = (0..=20).map(|k| bpsk_awgn_ber(k as f64 * 0.5)).collect();
        assert!(grid.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(bpsk_awgn_ber(f64::INFINITY), 0.0);
    }

    #[test]
    fn chi_square_median() {
        // Median of chi-square(1) is (Φ⁻¹(0.75))² = 0.454936...
        let m = chi_square_quantile(1, 0.5).unwrap();
        assert!((m - 0.454_936_423_119_572_8).abs() < 1e-9, "{m}");
        assert!(chi_square_quantile(0, 0.5).is_err());
        assert!(chi_square_quantile(3, 1.0).is_err());
    }

    #[test]
    fn mean_std_hand_values() {
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }
}
