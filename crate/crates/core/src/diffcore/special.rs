use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal CDF, Φ(z) = erfc(-z/√2)/2.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Standard normal density φ(z).
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Exact GELU, z·Φ(z).
pub fn gelu(z: f64) -> f64 {
    z * normal_cdf(z)
}

/// d/dz GELU(z) = Φ(z) + z·φ(z).
pub fn gelu_derivative(z: f64) -> f64 {
    normal_cdf(z) + z * normal_pdf(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Maclaurin series of erf; converges quickly for |x| ≤ 3.
    fn erf_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        for n in 1..200 {
            term *= -x * x / n as f64;
            sum += term / (2 * n + 1) as f64;
        }
        sum * 2.0 / PI.sqrt()
    }

    fn cdf_oracle(z: f64) -> f64 {
        0.5 * (1.0 + erf_series(z * FRAC_1_SQRT_2))
    }

    #[test]
    fn gelu_reference_points() {
        assert_eq!(gelu(0.0), 0.0);
        assert!((gelu(10.0) - 10.0).abs() < 1e-6);
        // Φ(1) from the series oracle is 0.841344746...
        let expected = cdf_oracle(1.0);
        assert!((expected - 0.841_344_746_068_543).abs() < 1e-12);
        assert!((gelu(1.0) - 0.841_345).abs() < 1e-5);
        assert!((gelu(1.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn cdf_matches_series_oracle() {
        let mut z = -3.0;
        while z <= 3.0 {
            assert!((normal_cdf(z) - cdf_oracle(z)).abs() < 1e-12, "z={z}");
            z += 0.125;
        }
    }

    #[test]
    fn derivative_at_one() {
        // Φ(1) + φ(1) with φ(1) = e^{-1/2}/√(2π) = 0.2419707245...
        let expected = cdf_oracle(1.0) + (-0.5f64).exp() / (2.0 * PI).sqrt();
        assert!((gelu_derivative(1.0) - expected).abs() < 1e-12);
        assert!((gelu_derivative(1.0) - 1.083_316).abs() < 1e-6);
    }

    #[test]
    fn monotone_above_minus_half_and_even_residual() {
        let grid: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.1).collect();
        for w in grid.windows(2) {
            if w[0] >= -0.5 {
                assert!(gelu(w[1]) >= gelu(w[0]));
            }
        }
        // gelu(z) - z/2 = z(Φ(z) - 1/2) is a product of two odd functions
        for &z in &grid {
            let r = |x: f64| gelu(x) - x / 2.0;
            assert!((r(z) - r(-z)).abs() < 1e-12, "z={z}");
        }
    }
}
