//! Error norms and multi-run aggregation.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Relative discrete L² error ‖pred − ref‖₂ / ‖ref‖₂ over matched points.
pub fn relative_l2(pred: &[f64], reference: &[f64]) -> Result<f64> {
    if pred.len() != reference.len() {
        return Err(Error::config("prediction and reference lengths differ"));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (p, r) in pred.iter().zip(reference) {
        num += (p - r) * (p - r);
        den += r * r;
    }
    if den == 0.0 {
        return Err(Error::config("reference has zero L2 norm"));
    }
    Ok((num / den).sqrt())
}

/// Relative discrete L∞ error max|pred − ref| / max|ref|.
pub fn relative_linf(pred: &[f64], reference: &[f64]) -> Result<f64> {
    if pred.len() != reference.len() {
        return Err(Error::config("prediction and reference lengths differ"));
    }
    let num = pred.iter().zip(reference).map(|(p, r)| (p - r).abs()).fold(0.0, f64::max);
    let den = reference.iter().map(|r| r.abs()).fold(0.0, f64::max);
    if den == 0.0 {
        return Err(Error::config("reference has zero L∞ norm"));
    }
    Ok(num / den)
}

/// Mean and sample standard deviation over runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStatistics {
    pub values: Vec<f64>,
    pub mean: f64,
    /// Sample (n−1) standard deviation; 0 for a single run.
    pub std: f64,
    pub count: usize,
}

/// Aggregate per-run scalars; errors on empty input.
pub fn aggregate_runs(values: &[f64]) -> Result<RunStatistics> {
    if values.is_empty() {
        return Err(Error::config("cannot aggregate zero runs"));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n == 1 {
        0.0
    } else {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n as f64 - 1.0)).sqrt()
    };
    Ok(RunStatistics { values: values.to_vec(), mean, std, count: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identical_fields_have_zero_error() {
        let a = vec![1.0, -2.0, 3.0];
        assert_eq!(relative_l2(&a, &a).unwrap(), 0.0);
        assert_eq!(relative_linf(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn uniform_scaling_gives_exact_relative_error() {
        let r = vec![1.0, -2.0, 3.0, 0.5];
        let p: Vec<f64> = r.iter().map(|v| 1.01 * v).collect();
        assert_abs_diff_eq!(relative_l2(&p, &r).unwrap(), 0.01, epsilon = 1e-12);
    }

    #[test]
    fn single_unit_bump_on_ones_is_inv_sqrt_n() {
        // hand computation: ‖e₁‖₂/‖1‖₂ = 1/√n
        for n in [4usize, 25, 100] {
            let r = vec![1.0; n];
            let mut p = r.clone();
            p[0] += 1.0;
            assert_abs_diff_eq!(
                relative_l2(&p, &r).unwrap(),
                1.0 / (n as f64).sqrt(),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn single_point_spike_in_linf() {
        let r = vec![0.2, -1.0, 0.7];
        let mut p = r.clone();
        p[2] += 0.1;
        assert_abs_diff_eq!(relative_linf(&p, &r).unwrap(), 0.1, epsilon = 1e-14);
    }

    #[test]
    fn error_scale_covariance() {
        let r = vec![0.3, 1.4, -0.8, 2.0];
        let e = vec![0.1, -0.05, 0.2, 0.0];
        for &alpha in &[0.5, 2.0, -3.0] {
            let p1: Vec<f64> = r.iter().zip(&e).map(|(r, e)| r + e).collect();
            let pa: Vec<f64> = r.iter().zip(&e).map(|(r, e)| r + alpha * e).collect();
            let l2 = relative_l2(&p1, &r).unwrap();
            let l2a = relative_l2(&pa, &r).unwrap();
            assert_abs_diff_eq!(l2a, alpha.abs() * l2, epsilon = 1e-12);
            let li = relative_linf(&p1, &r).unwrap();
            let lia = relative_linf(&pa, &r).unwrap();
            assert_abs_diff_eq!(lia, alpha.abs() * li, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_reference_norm_is_an_error() {
        let z = vec![0.0, 0.0];
        let p = vec![1.0, 1.0];
        assert!(relative_l2(&p, &z).is_err());
        assert!(relative_linf(&p, &z).is_err());
    }

    #[test]
    fn aggregate_constant_runs() {
        let s = aggregate_runs(&[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(s.mean, 5.0);
        assert_eq!(s.std, 0.0);
        assert_eq!(s.count, 3);
    }

    #[test]
    fn aggregate_two_runs_hand_computed() {
        // {4, 6}: mean 5, sample std √((1+1)/1) = √2
        let s = aggregate_runs(&[4.0, 6.0]).unwrap();
        assert_eq!(s.mean, 5.0);
        assert_abs_diff_eq!(s.std, std::f64::consts::SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(s.std, 1.4142, epsilon = 1e-4);
    }

    #[test]
    fn aggregate_single_run_has_zero_std() {
        let s = aggregate_runs(&[7.0]).unwrap();
        assert_eq!(s.mean, 7.0);
        assert_eq!(s.std, 0.0);
    }

    #[test]
    fn aggregate_is_permutation_invariant() {
        let a = aggregate_runs(&[1.0, 4.0, 2.5, 9.0]).unwrap();
        let b = aggregate_runs(&[9.0, 2.5, 4.0, 1.0]).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_abs_diff_eq!(a.std, b.std, epsilon = 1e-15);
    }

    #[test]
    fn empty_aggregate_is_an_error() {
        assert!(aggregate_runs(&[]).is_err());
    }
}
