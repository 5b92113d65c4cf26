//! Closed-form solution of the high-dimensional Poisson benchmark.

/// u(x) = exp(−10‖x‖²).
pub fn highd_exact(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (-10.0 * r2).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unit_value_at_origin() {
        assert_eq!(highd_exact(&[0.0; 9]), 1.0);
    }

    #[test]
    fn unit_radius_value() {
        let mut x = vec![0.0; 9];
        x[3] = 1.0;
        assert_abs_diff_eq!(highd_exact(&x), (-10.0f64).exp(), epsilon = 1e-18);
        assert_abs_diff_eq!(highd_exact(&x), 4.54e-5, epsilon = 1e-7);
    }

    #[test]
    fn monotone_decreasing_in_radius() {
        let mut prev = f64::INFINITY;
        for k in 0..20 {
            let r = 0.1 * k as f64;
            let v = highd_exact(&[r, 0.0, 0.0]);
            assert!(v < prev || k == 0);
            prev = v;
        }
    }
}
