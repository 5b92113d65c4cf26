//! Exact contact-discontinuity solution of the Euler Riemann problem.
//!
//! Left state (ρ, u, p) = (1.4, 0.1, 1.0), right state (1.0, 0.1, 1.0):
//! pressure and velocity are uniform, so the initial density jump at x = 0.5
//! is advected at the fluid velocity and the solution stays piecewise
//! constant with interface x = 0.5 + 0.1 t.

/// (ρ, u, p) at (x, t).
pub fn euler_exact(x: f64, t: f64) -> (f64, f64, f64) {
    let interface = 0.5 + 0.1 * t;
    let rho = if x < interface { 1.4 } else { 1.0 };
    (rho, 0.1, 1.0)
}
