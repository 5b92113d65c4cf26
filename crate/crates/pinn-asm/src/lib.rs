//! Physics-informed neural network solver with residual/gradient-based
//! adaptive collocation sampling.
//!
//! The crate trains fully connected networks to minimize a composite PDE loss
//! (mean-square residual plus data mismatch) and grows the collocation set
//! adaptively: the domain is split into uniform subdomains, per-subdomain
//! quadrature means of |R| and |∇u| locate the cell where the approximation
//! is worst, and new points with the largest residual and/or solution
//! gradient are added there. Three strategies are provided — residual only,
//! residual + gradient, and residual + gradient + boundary mismatch — along
//! with a random-growth baseline.
//!
//! Benchmarks with independent reference oracles are bundled: the viscous
//! Burgers equation (forward and inverse), a contact-discontinuity Riemann
//! problem for the 1-D compressible Euler equations, the Poisson equation on
//! an L-shaped domain, and a high-dimensional Poisson problem. The `pinn-asm`
//! binary runs single experiments, seeded sweeps, and plot-data extraction
//! from a TOML config or built-in per-benchmark defaults.
//!
//! The narrative guide lives in `book/`; its code snippets compile and run as
//! doc-tests of this crate (see [`guide`]).

pub mod autodiff;
pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod network;
pub mod optim;
pub mod metrics;
pub mod problems;
pub mod report;
pub mod sampler;
pub mod trainer;
pub mod reference;
pub mod rng;

pub use error::{Error, Result};
