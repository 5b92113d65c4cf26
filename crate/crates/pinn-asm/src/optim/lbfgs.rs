//! Limited-memory BFGS with a strong-Wolfe line search.
//!
//! Two-loop recursion over the last `memory` curvature pairs, initial
//! Hessian scaling γ = sᵀy / yᵀy, and the bracket/zoom line search of
//! Nocedal & Wright (Algorithms 3.5 and 3.6) with cubic interpolation.
//! Line-search failure is not fatal: the best parameters seen so far are
//! returned with a flagged status.

use crate::autodiff::Objective;
use crate::error::{Error, Result};
use std::collections::VecDeque;

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsConfig {
    pub memory: usize,
    pub c1: f64,
    pub c2: f64,
    pub grad_tol: f64,
    pub max_iterations: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig { memory: 50, c1: 1e-4, c2: 0.9, grad_tol: 1e-8, max_iterations: 20_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum LbfgsStatus {
    /// Gradient norm reached the tolerance.
    GradientTolerance,
    /// Iteration budget exhausted.
    MaxIterations,
    /// No step satisfying the Wolfe conditions was found; best-so-far returned.
    LineSearchFailed,
    /// Started at a stationary point; zero iterations.
    AlreadyStationary,
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome {
    pub params: Vec<f64>,
    pub loss: f64,
    pub iterations: usize,
    pub status: LbfgsStatus,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Minimizer of the cubic through (x1, f1, g1), (x2, f2, g2), clamped to
/// `bounds`; falls back to bisection when the cubic has no real minimum.
fn cubic_interpolate(x1: f64, f1: f64, g1: f64, x2: f64, f2: f64, g2: f64, bounds: (f64, f64)) -> f64 {
    let (lo, hi) = bounds;
    let d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2);
    let d2sq = d1 * d1 - g1 * g2;
    if d2sq >= 0.0 {
        let d2 = d2sq.sqrt();
        let min_pos = if x1 <= x2 {
            x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2))
        } else {
            x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2))
        };
        if min_pos.is_finite() {
            return min_pos.clamp(lo, hi);
        }
    }
    0.5 * (lo + hi)
}

struct Probe {
    f: f64,
    g: Vec<f64>,
    dphi: f64,
}

struct LineSearch<'a> {
    obj: &'a dyn Objective,
    x0: &'a [f64],
    dir: &'a [f64],
    f0: f64,
    dphi0: f64,
    c1: f64,
    c2: f64,
    evals: usize,
    x: Vec<f64>,
    g: Vec<f64>,
}

impl<'a> LineSearch<'a> {
    fn phi(&mut self, alpha: f64) -> Result<Probe> {
        for i in 0..self.x0.len() {
            self.x[i] = self.x0[i] + alpha * self.dir[i];
        }
        let f = self.obj.value_and_grad(&self.x, &mut self.g)?;
        self.evals += 1;
        Ok(Probe { f, g: self.g.clone(), dphi: dot(&self.g, self.dir) })
    }

    fn armijo(&self, alpha: f64, f: f64) -> bool {
        // ε-slack keeps the test meaningful once per-step improvements drop
        // below the floating-point resolution of f.
        f <= self.f0 + self.c1 * alpha * self.dphi0 + 4.0 * f64::EPSILON * (1.0 + self.f0.abs())
    }

    fn curvature(&self, dphi: f64) -> bool {
        dphi.abs() <= -self.c2 * self.dphi0
    }
}

struct WolfeResult {
    alpha: f64,
    f: f64,
    g: Vec<f64>,
    success: bool,
}

/// Strong-Wolfe search along `dir` from `x0`. Requires a descent direction.
fn strong_wolfe(
    obj: &dyn Objective,
    x0: &[f64],
    f0: f64,
    g0: &[f64],
    dir: &[f64],
    c1: f64,
    c2: f64,
) -> Result<WolfeResult> {
    let dphi0 = dot(g0, dir);
    debug_assert!(dphi0 < 0.0, "line search requires a descent direction");
    let n = x0.len();
    let mut ls = LineSearch {
        obj,
        x0,
        dir,
        f0,
        dphi0,
        c1,
        c2,
        evals: 0,
        x: vec![0.0; n],
        g: vec![0.0; n],
    };
    const MAX_BRACKET: usize = 20;
    const MAX_ZOOM: usize = 30;
    let alpha_max = 1e10;

    let mut alpha_prev = 0.0;
    let mut f_prev = f0;
    let mut dphi_prev = dphi0;
    let mut alpha = 1.0;
    let mut bracket: Option<(f64, f64, f64, f64, f64, f64)> = None; // (lo, f_lo, dphi_lo, hi, f_hi, dphi_hi)
    let mut best: Option<WolfeResult> = None;

    for i in 0..MAX_BRACKET {
        let p = ls.phi(alpha)?;
        if p.f.is_finite() {
            if best.as_ref().map_or(true, |b| p.f < b.f) {
                best = Some(WolfeResult { alpha, f: p.f, g: p.g.clone(), success: false });
            }
        } else {
            // overshoot into non-finite territory: shrink hard
            alpha = 0.5 * (alpha_prev + alpha).min(alpha * 0.1);
            continue;
        }
        if !ls.armijo(alpha, p.f) || (i > 0 && p.f >= f_prev) {
            bracket = Some((alpha_prev, f_prev, dphi_prev, alpha, p.f, p.dphi));
            break;
        }
        if ls.curvature(p.dphi) {
            return Ok(WolfeResult { alpha, f: p.f, g: p.g, success: true });
        }
        if p.dphi >= 0.0 {
            bracket = Some((alpha, p.f, p.dphi, alpha_prev, f_prev, dphi_prev));
            break;
        }
        alpha_prev = alpha;
        f_prev = p.f;
        dphi_prev = p.dphi;
        alpha = (2.0 * alpha).min(alpha_max);
    }

    let Some((mut lo, mut f_lo, mut dphi_lo, mut hi, mut f_hi, mut dphi_hi)) = bracket else {
        // never bracketed: give back the best finite probe
        return Ok(best.unwrap_or(WolfeResult { alpha: 0.0, f: f0, g: g0.to_vec(), success: false }));
    };

    for _ in 0..MAX_ZOOM {
        if (hi - lo).abs() < 1e-16 * lo.abs().max(1.0) {
            break;
        }
        let span = (hi - lo).abs();
        let lo_b = lo.min(hi) + 0.1 * span;
        let hi_b = lo.max(hi) - 0.1 * span;
        let alpha = cubic_interpolate(lo, f_lo, dphi_lo, hi, f_hi, dphi_hi, (lo_b, hi_b));
        let p = ls.phi(alpha)?;
        if p.f.is_finite() && best.as_ref().map_or(true, |b| p.f < b.f) {
            best = Some(WolfeResult { alpha, f: p.f, g: p.g.clone(), success: false });
        }
        if !ls.armijo(alpha, p.f) || p.f >= f_lo {
            hi = alpha;
            f_hi = p.f;
            dphi_hi = p.dphi;
        } else {
            if ls.curvature(p.dphi) {
                return Ok(WolfeResult { alpha, f: p.f, g: p.g, success: true });
            }
            if p.dphi * (hi - lo) >= 0.0 {
                hi = lo;
                f_hi = f_lo;
                dphi_hi = dphi_lo;
            }
            lo = alpha;
            f_lo = p.f;
            dphi_lo = p.dphi;
        }
    }
    Ok(best.unwrap_or(WolfeResult { alpha: 0.0, f: f0, g: g0.to_vec(), success: false }))
}

/// Minimize `obj` from `start`; `on_iteration(iter, loss, params)` fires after
/// accepted step.
pub fn lbfgs_minimize(
    obj: &dyn Objective,
    start: Vec<f64>,
    cfg: &LbfgsConfig,
    mut on_iteration: impl FnMut(usize, f64, &[f64]),
) -> Result<LbfgsOutcome> {
    let n = start.len();
    let mut x = start;
    let mut g = vec![0.0; n];
    let f = obj.value_and_grad(&x, &mut g)?;
    if !f.is_finite() {
        return Err(Error::Divergence { epoch: 0, detail: "non-finite loss at L-BFGS start".into() });
    }
    let mut f = f;
    if norm(&g) <= cfg.grad_tol {
        return Ok(LbfgsOutcome { params: x, loss: f, iterations: 0, status: LbfgsStatus::AlreadyStationary });
    }

    let mut best_x = x.clone();
    let mut best_f = f;
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new(); // (s, y, 1/yᵀs)
    let mut dir = vec![0.0; n];
    let mut iterations = 0;
    let mut status = LbfgsStatus::MaxIterations;

    for iter in 0..cfg.max_iterations {
        // two-loop recursion: dir = −H g
        dir.copy_from_slice(&g);
        let mut alphas = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let a = rho * dot(s, &dir);
            for i in 0..n {
                dir[i] -= a * y[i];
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            for v in dir.iter_mut() {
                *v *= gamma;
            }
        }
        for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &dir);
            for i in 0..n {
                dir[i] += (a - b) * s[i];
            }
        }
        for v in dir.iter_mut() {
            *v = -*v;
        }
        if dot(&g, &dir) >= 0.0 {
            // not a descent direction (stale curvature); restart from steepest descent
            pairs.clear();
            for i in 0..n {
                dir[i] = -g[i];
            }
        }

        let ls = strong_wolfe(obj, &x, f, &g, &dir, cfg.c1, cfg.c2)?;
        if !ls.success || ls.alpha == 0.0 {
            status = LbfgsStatus::LineSearchFailed;
            if ls.f < best_f {
                best_f = ls.f;
                for i in 0..n {
                    best_x[i] = x[i] + ls.alpha * dir[i];
                }
            }
            break;
        }
        let mut s = vec![0.0; n];
        let mut y = ls.g.clone();
        for i in 0..n {
            s[i] = ls.alpha * dir[i];
            y[i] -= g[i];
            x[i] += s[i];
        }
        f = ls.f;
        g = ls.g;
        iterations = iter + 1;
        on_iteration(iterations, f, &x);
        if f < best_f {
            best_f = f;
            best_x.copy_from_slice(&x);
        }
        let sy = dot(&s, &y);
        if sy > 1e-10 * norm(&s) * norm(&y) {
            if pairs.len() == cfg.memory {
                pairs.pop_front();
            }
            let rho = 1.0 / sy;
            pairs.push_back((s, y, rho));
        }
        if norm(&g) <= cfg.grad_tol {
            status = LbfgsStatus::GradientTolerance;
            break;
        }
    }

    Ok(LbfgsOutcome { params: best_x, loss: best_f, iterations, status })
}
