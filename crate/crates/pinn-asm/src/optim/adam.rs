//! Adam with bias correction.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig { lr, ..AdamConfig::default() }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First/second moment vectors and the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(dim: usize, cfg: AdamConfig) -> Self {
        AdamState { cfg, m: vec![0.0; dim], v: vec![0.0; dim], t: 0 }
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    /// One bias-corrected update in place.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if grad.len() != params.len() || grad.len() != self.m.len() {
            return Err(Error::config("gradient length does not match parameters"));
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence { epoch: self.t as usize, detail: "non-finite gradient".into() });
        }
        self.t += 1;
        let b1 = self.cfg.beta1;
        let b2 = self.cfg.beta2;
        let bc1 = 1.0 - b1.powi(self.t as i32);
        let bc2 = 1.0 - b2.powi(self.t as i32);
        let lr = self.cfg.lr;
        let eps = self.cfg.eps;
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g;
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g;
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            params[i] -= lr * mhat / (vhat.sqrt() + eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_identity_on_params() {
        let mut st = AdamState::new(3, AdamConfig::with_lr(0.1));
        let mut p = vec![1.0, -2.0, 0.5];
        let orig = p.clone();
        st.step(&mut p, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p, orig);
        assert_eq!(st.t(), 1);
    }

    #[test]
    fn first_step_matches_closed_form() {
        // From zero moments: m̂ = g, v̂ = g², so the update is
        // lr·g/(|g| + ε) — computed here independently of the recurrence.
        let lr = 0.1;
        let eps = 1e-8;
        let g: [f64; 3] = [3.0, -0.25, 1e-3];
        let closed_form: Vec<f64> = g.iter().map(|&gi| lr * gi / (gi.abs() + eps)).collect();
        let mut st = AdamState::new(3, AdamConfig { lr, eps, ..AdamConfig::default() });
        let mut p = vec![0.0; 3];
        st.step(&mut p, &g).unwrap();
        for i in 0..3 {
            assert!((p[i] + closed_form[i]).abs() < 1e-15, "coord {i}");
            // and the move is ±lr up to the ε correction
            assert!((p[i].abs() - lr).abs() < 1e-4);
        }
    }

    #[test]
    fn quadratic_converges_below_1e6_in_2000_steps() {
        // loss θ²/2, gradient θ
        let mut st = AdamState::new(1, AdamConfig::with_lr(0.1));
        let mut p = vec![1.0];
        let mut steps = 0;
        for _ in 0..2000 {
            let g = [p[0]];
            st.step(&mut p, &g).unwrap();
            steps += 1;
            if p[0].abs() < 1e-6 {
                break;
            }
        }
        assert!(p[0].abs() < 1e-6, "|θ| = {} after {steps} steps", p[0].abs());
    }

    #[test]
    fn non_finite_gradient_is_divergence() {
        let mut st = AdamState::new(1, AdamConfig::default());
        let mut p = vec![1.0];
        assert!(matches!(st.step(&mut p, &[f64::NAN]), Err(Error::Divergence { .. })));
    }
}
