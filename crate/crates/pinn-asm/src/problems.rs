//! Benchmark problems: residual operators, constraint sets, and descriptors.
//!
//! Residual operators are written against a [`FieldView`] — anything that can
//! report outputs and input derivatives at a point — so the same residual
//! code runs on network evaluations (training, statistics) and on hand-built
//! records of exact solutions (tests). Each operator also provides the
//! partial derivatives of its residual components with respect to the viewed
//! quantities; the trainer feeds those seeds into the network's reverse pass
//! to get exact parameter gradients.

use crate::autodiff::EvaluationRecord;
use crate::error::{Error, Result};
use crate::geometry::{Domain, FaceSelector};
use crate::network::MlpArchitecture;
use crate::optim::{AdamConfig, LbfgsActivation, LbfgsConfig, PhaseSchedule};
use crate::reference::{burgers_reference, euler_exact, highd_exact};
use std::sync::Arc;

/// Viscosity scale of the Burgers benchmarks; the trainable coefficient is
/// the dimensionless ν̂ with ν = ν̂ · 0.01/π.
pub const BURGERS_NU0: f64 = 0.01 / std::f64::consts::PI;

/// Adiabatic index of the Euler benchmark.
pub const EULER_GAMMA: f64 = 1.4;

/// Point values and derivatives of a K-output field at one point.
pub trait FieldView {
    fn coord(&self, j: usize) -> f64;
    fn value(&self, k: usize) -> f64;
    /// ∂u_k/∂x_j.
    fn d1(&self, k: usize, j: usize) -> f64;
    /// ∂²u_k/∂x_j².
    fn d2(&self, k: usize, j: usize) -> f64;
}

impl FieldView for crate::autodiff::JetEvaluator {
    fn coord(&self, j: usize) -> f64 {
        self.input()[j]
    }

    fn value(&self, k: usize) -> f64 {
        self.output(k)
    }

    fn d1(&self, k: usize, j: usize) -> f64 {
        crate::autodiff::JetEvaluator::d1(self, k, j)
    }

    fn d2(&self, k: usize, j: usize) -> f64 {
        crate::autodiff::JetEvaluator::d2(self, k, j)
    }
}

impl FieldView for EvaluationRecord {
    fn coord(&self, j: usize) -> f64 {
        self.inputs[j]
    }

    fn value(&self, k: usize) -> f64 {
        self.outputs[k]
    }

    fn d1(&self, k: usize, j: usize) -> f64 {
        self.first(k, j)
    }

    fn d2(&self, k: usize, j: usize) -> f64 {
        self.second(k, j)
    }
}

/// Combined partial derivatives of a weighted residual sum with respect to
/// the viewed quantities, in record layout.
#[derive(Debug, Clone)]
pub struct ResidualSeeds {
    /// ∂/∂u_k, length K.
    pub wrt_value: Vec<f64>,
    /// ∂/∂(∂u_k/∂x_j), K×D row-major.
    pub wrt_d1: Vec<f64>,
    /// ∂/∂(∂²u_k/∂x_j²), K×D row-major.
    pub wrt_d2: Vec<f64>,
    /// ∂/∂(extra scalar e).
    pub wrt_extras: Vec<f64>,
}

impl ResidualSeeds {
    pub fn zeros(k: usize, d: usize, extras: usize) -> Self {
        ResidualSeeds {
            wrt_value: vec![0.0; k],
            wrt_d1: vec![0.0; k * d],
            wrt_d2: vec![0.0; k * d],
            wrt_extras: vec![0.0; extras],
        }
    }

    pub fn clear(&mut self) {
        self.wrt_value.iter_mut().for_each(|v| *v = 0.0);
        self.wrt_d1.iter_mut().for_each(|v| *v = 0.0);
        self.wrt_d2.iter_mut().for_each(|v| *v = 0.0);
        self.wrt_extras.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// The PDE residual operator of a benchmark.
#[derive(Clone)]
pub enum ResidualForm {
    /// R = ∂_t u + u ∂_x u − ν ∂²_x u with ν = ν̂·nu0 (ν̂ = 1 when no extras).
    /// Axes: 0 = x, 1 = t.
    Burgers { nu0: f64 },
    /// Conservative-form residuals of (ρ, ρu, E) with outputs (ρ, u, p) and
    /// E = p/(γ−1) + ρu²/2. Axes: 0 = x, 1 = t.
    Euler { gamma: f64 },
    /// R = −Δu − f(x).
    Poisson { source: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync> },
}

impl std::fmt::Debug for ResidualForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ResidualForm::Burgers { nu0 } => write!(f, "Burgers {{ nu0: {nu0} }}"),
            ResidualForm::Euler { gamma } => write!(f, "Euler {{ gamma: {gamma} }}"),
            ResidualForm::Poisson { .. } => write!(f, "Poisson {{ source }}"),
        }
    }
}

impl ResidualForm {
    /// Residual components M.
    pub fn components(&self) -> usize {
        match self {
            ResidualForm::Euler { .. } => 3,
            _ => 1,
        }
    }

    /// Network outputs K the operator expects.
    pub fn output_dim(&self) -> usize {
        match self {
            ResidualForm::Euler { .. } => 3,
            _ => 1,
        }
    }

    /// Which axes need second derivatives.
    pub fn second_axes(&self, dim: usize) -> Vec<bool> {
        match self {
            ResidualForm::Burgers { .. } => {
                let mut m = vec![false; dim];
                m[0] = true; // ∂²_x only
                m
            }
            ResidualForm::Euler { .. } => vec![false; dim],
            ResidualForm::Poisson { .. } => vec![true; dim],
        }
    }

    /// Residual components at the viewed point into `out` (length M).
    pub fn eval<V: FieldView>(&self, v: &V, dim: usize, extras: &[f64], out: &mut [f64]) {
        match self {
            ResidualForm::Burgers { nu0 } => {
                let nu_hat = extras.first().copied().unwrap_or(1.0);
                let nu = nu_hat * nu0;
                let u = v.value(0);
                out[0] = v.d1(0, 1) + u * v.d1(0, 0) - nu * v.d2(0, 0);
            }
            ResidualForm::Euler { gamma } => {
                let ig = 1.0 / (gamma - 1.0);
                let (rho, u, p) = (v.value(0), v.value(1), v.value(2));
                let (rho_x, rho_t) = (v.d1(0, 0), v.d1(0, 1));
                let (u_x, u_t) = (v.d1(1, 0), v.d1(1, 1));
                let (p_x, p_t) = (v.d1(2, 0), v.d1(2, 1));
                let e = p * ig + 0.5 * rho * u * u;
                let e_x = p_x * ig + 0.5 * rho_x * u * u + rho * u * u_x;
                let e_t = p_t * ig + 0.5 * rho_t * u * u + rho * u * u_t;
                out[0] = rho_t + rho_x * u + rho * u_x;
                out[1] = rho_t * u + rho * u_t + rho_x * u * u + 2.0 * rho * u * u_x + p_x;
                out[2] = e_t + u_x * (e + p) + u * (e_x + p_x);
            }
            ResidualForm::Poisson { source } => {
                let x: Vec<f64> = (0..dim).map(|j| v.coord(j)).collect();
                let lap: f64 = (0..dim).map(|j| v.d2(0, j)).sum();
                out[0] = -lap - source(&x);
            }
        }
    }

    /// Accumulate `Σ_m coeff[m] · ∂R_m/∂(viewed quantity)` into `seeds`.
    pub fn add_seeds<V: FieldView>(
        &self,
        v: &V,
        dim: usize,
        extras: &[f64],
        coeff: &[f64],
        seeds: &mut ResidualSeeds,
    ) {
        match self {
            ResidualForm::Burgers { nu0 } => {
                let nu_hat = extras.first().copied().unwrap_or(1.0);
                let nu = nu_hat * nu0;
                let c = coeff[0];
                let u = v.value(0);
                seeds.wrt_value[0] += c * v.d1(0, 0); // ∂R/∂u = u_x
                seeds.wrt_d1[0] += c * u; // ∂R/∂u_x = u
                seeds.wrt_d1[1] += c; // ∂R/∂u_t = 1
                seeds.wrt_d2[0] += c * (-nu);
                if !extras.is_empty() {
                    seeds.wrt_extras[0] += c * (-nu0 * v.d2(0, 0));
                }
            }
            ResidualForm::Euler { gamma } => {
                let ig = 1.0 / (gamma - 1.0);
                let (rho, u, p) = (v.value(0), v.value(1), v.value(2));
                let (rho_x, rho_t) = (v.d1(0, 0), v.d1(0, 1));
                let (u_x, u_t) = (v.d1(1, 0), v.d1(1, 1));
                let p_x = v.d1(2, 0);
                let e = p * ig + 0.5 * rho * u * u;
                let e_x = p_x * ig + 0.5 * rho_x * u * u + rho * u * u_x;
                let (c0, c1, c2) = (coeff[0], coeff[1], coeff[2]);
                // mass: R0 = ρ_t + ρ_x u + ρ u_x
                seeds.wrt_value[0] += c0 * u_x;
                seeds.wrt_value[1] += c0 * rho_x;
                seeds.wrt_d1[0] += c0 * u; // ρ_x
                seeds.wrt_d1[1] += c0; // ρ_t
                seeds.wrt_d1[2] += c0 * rho; // u_x
                // momentum: R1 = ρ_t u + ρ u_t + ρ_x u² + 2ρ u u_x + p_x
                seeds.wrt_value[0] += c1 * (u_t + 2.0 * u * u_x);
                seeds.wrt_value[1] += c1 * (rho_t + 2.0 * rho_x * u + 2.0 * rho * u_x);
                seeds.wrt_d1[0] += c1 * u * u;
                seeds.wrt_d1[1] += c1 * u;
                seeds.wrt_d1[2] += c1 * 2.0 * rho * u;
                seeds.wrt_d1[3] += c1 * rho; // u_t
                seeds.wrt_d1[4] += c1; // p_x
                // energy: R2 = E_t + u_x (E + p) + u (E_x + p_x)
                seeds.wrt_value[0] += c2 * (u * u_t + 1.5 * u * u * u_x);
                seeds.wrt_value[1] += c2
                    * (rho_t * u + rho * u_t + u_x * rho * u + e_x + p_x + u * (rho_x * u + rho * u_x));
                seeds.wrt_value[2] += c2 * (u_x * (ig + 1.0));
                seeds.wrt_d1[0] += c2 * 0.5 * u * u * u; // ρ_x
                seeds.wrt_d1[1] += c2 * 0.5 * u * u; // ρ_t
                seeds.wrt_d1[2] += c2 * (e + p + rho * u * u); // u_x
                seeds.wrt_d1[3] += c2 * rho * u; // u_t
                seeds.wrt_d1[4] += c2 * u * (ig + 1.0); // p_x
                seeds.wrt_d1[5] += c2 * ig; // p_t
            }
            ResidualForm::Poisson { .. } => {
                let c = coeff[0];
                for j in 0..dim {
                    seeds.wrt_d2[j] += -c;
                }
            }
        }
    }

    /// Scalar |R| reduction used by the subdomain statistics (L1 over
    /// components).
    pub fn magnitude(&self, res: &[f64]) -> f64 {
        res.iter().map(|r| r.abs()).sum()
    }
}

/// Source term of the high-dimensional Poisson problem:
/// f(x) = (20 d − 400‖x‖²) e^{−10‖x‖²}, the unique source making
/// u = e^{−10‖x‖²} exact.
pub fn highd_source(x: &[f64], d: usize) -> f64 {
    debug_assert_eq!(x.len(), d);
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (20.0 * d as f64 - 400.0 * r2) * (-10.0 * r2).exp()
}

/// How a constraint set's points are drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintSampler {
    Boundary(FaceSelector),
    Interior,
}

/// One data/IC/BC constraint set: sampler, default point count, target map.
#[derive(Clone)]
pub struct ConstraintSpec {
    pub name: &'static str,
    pub sampler: ConstraintSampler,
    pub count: usize,
    pub target: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

impl std::fmt::Debug for ConstraintSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConstraintSpec")
            .field("name", &self.name)
            .field("sampler", &self.sampler)
            .field("count", &self.count)
            .finish()
    }
}

/// Reference oracle attached to a problem, for error metrics.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceHandle {
    BurgersColeHopf { nu: f64 },
    EulerContact,
    LshapeFiniteDifference { resolution: usize },
    HighdExact,
}

/// Fixed evaluation grid for error metrics.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalGrid {
    /// nx × nt uniform including endpoints; metrics over u(x, t).
    SpaceTime { nx: usize, nt: usize },
    /// n uniform x-points at fixed t; metrics over the first output (ρ).
    TimeSlice { n: usize, t: f64 },
    /// Masked node grid of the L-shape at `resolution` cells per axis.
    MaskedNodes { resolution: usize },
    /// n uniform random points in the domain, drawn with a fixed seed so
    /// matched-seed runs share the grid.
    RandomPoints { n: usize, seed: u64 },
}

/// A complete benchmark: everything an experiment needs besides the
/// ASM/initial-set knobs in the run configuration.
#[derive(Debug, Clone)]
pub struct ProblemDescriptor {
    pub name: &'static str,
    pub domain: Domain,
    pub residual: ResidualForm,
    pub constraints: Vec<ConstraintSpec>,
    /// Named trainable scalars and their initial values.
    pub extras: Vec<(String, f64)>,
    pub arch: MlpArchitecture,
    pub schedule: PhaseSchedule,
    pub reference: ReferenceHandle,
    pub eval: EvalGrid,
}

impl ProblemDescriptor {
    pub fn validate(&self) -> Result<()> {
        if self.arch.input_dim != self.domain.dim() {
            return Err(Error::config("network input dim must match domain dim"));
        }
        if self.arch.output_dim != self.residual.output_dim() {
            return Err(Error::config("network output dim must match residual operator"));
        }
        self.schedule.validate()
    }
}

/// Noiseless inverse-problem data: n uniform space–time points with
/// Cole–Hopf reference values at the true viscosity.
pub fn generate_inverse_data(n: usize, rng: &mut impl rand::Rng) -> Vec<(f64, f64, f64)> {
    Domain::burgers()
        .sample_interior(n, rng)
        .into_iter()
        .map(|p| (p[0], p[1], burgers_reference(p[0], p[1], BURGERS_NU0)))
        .collect()
}

/// Registered benchmark names.
pub const PROBLEM_NAMES: &[&str] =
    &["burgers-fwd", "burgers-inv", "euler-sod-contact", "poisson-lshape", "poisson-hd"];

/// Build a benchmark descriptor. `hd_dim` selects the dimension of the
/// high-dimensional Poisson problem and is ignored elsewhere.
pub fn descriptor(name: &str, hd_dim: usize) -> Result<ProblemDescriptor> {
    match name {
        "burgers-fwd" => Ok(burgers_forward()),
        "burgers-inv" => Ok(burgers_inverse()),
        "euler-sod-contact" => Ok(euler_contact()),
        "poisson-lshape" => Ok(poisson_lshape()),
        "poisson-hd" => poisson_hd(hd_dim),
        other => Err(Error::config(format!(
            "unknown problem '{other}'; expected one of {PROBLEM_NAMES:?}"
        ))),
    }
}

fn burgers_schedule() -> PhaseSchedule {
    PhaseSchedule {
        adam: AdamConfig::with_lr(8e-4),
        adam_max_epochs: 10_000,
        switch_loss_threshold: 2e-3,
        lbfgs_activation: LbfgsActivation::AlwaysAfter,
        lbfgs: LbfgsConfig { max_iterations: 2000, ..LbfgsConfig::default() },
    }
}

fn burgers_forward() -> ProblemDescriptor {
    let domain = Domain::burgers();
    ProblemDescriptor {
        name: "burgers-fwd",
        domain,
        residual: ResidualForm::Burgers { nu0: BURGERS_NU0 },
        constraints: vec![
            ConstraintSpec {
                name: "ic",
                sampler: ConstraintSampler::Boundary(FaceSelector::InitialTime),
                count: 100,
                target: Arc::new(|p| vec![-(std::f64::consts::PI * p[0]).sin()]),
            },
            ConstraintSpec {
                name: "bc",
                sampler: ConstraintSampler::Boundary(FaceSelector::SpatialBoundary),
                count: 200,
                target: Arc::new(|_| vec![0.0]),
            },
        ],
        extras: vec![],
        arch: MlpArchitecture::new(2, 1, 4, 40).expect("static arch"),
        schedule: burgers_schedule(),
        reference: ReferenceHandle::BurgersColeHopf { nu: BURGERS_NU0 },
        eval: EvalGrid::SpaceTime { nx: 256, nt: 100 },
    }
}

fn burgers_inverse() -> ProblemDescriptor {
    let mut d = burgers_forward();
    d.name = "burgers-inv";
    d.extras = vec![("nu_hat".to_string(), 2.0)]; // ν starts at 2·0.01/π = 0.02/π
    d.constraints.push(ConstraintSpec {
        name: "data",
        sampler: ConstraintSampler::Interior,
        count: 1000,
        target: Arc::new(|p| vec![burgers_reference(p[0], p[1], BURGERS_NU0)]),
    });
    d.schedule = PhaseSchedule {
        adam: AdamConfig::with_lr(1e-3),
        adam_max_epochs: 8000,
        switch_loss_threshold: 1e-3,
        lbfgs_activation: LbfgsActivation::OnlyIfAdamEpochsBelow { max_epochs: 1000 },
        lbfgs: LbfgsConfig { max_iterations: 2000, ..LbfgsConfig::default() },
    };
    d
}

fn euler_contact() -> ProblemDescriptor {
    let domain = Domain::euler();
    ProblemDescriptor {
        name: "euler-sod-contact",
        domain,
        residual: ResidualForm::Euler { gamma: EULER_GAMMA },
        constraints: vec![
            ConstraintSpec {
                name: "ic",
                sampler: ConstraintSampler::Boundary(FaceSelector::InitialTime),
                count: 200,
                target: Arc::new(|p| {
                    let (r, u, pr) = euler_exact(p[0], 0.0);
                    vec![r, u, pr]
                }),
            },
            ConstraintSpec {
                name: "bc",
                sampler: ConstraintSampler::Boundary(FaceSelector::SpatialBoundary),
                count: 100,
                target: Arc::new(|p| {
                    let (r, u, pr) = euler_exact(p[0], p[1]);
                    vec![r, u, pr]
                }),
            },
        ],
        extras: vec![],
        arch: MlpArchitecture::new(2, 3, 6, 20).expect("static arch"),
        schedule: PhaseSchedule {
            adam: AdamConfig::with_lr(1e-3),
            adam_max_epochs: 3000,
            switch_loss_threshold: 1e-3,
            lbfgs_activation: LbfgsActivation::AlwaysAfter,
            lbfgs: LbfgsConfig { max_iterations: 1500, ..LbfgsConfig::default() },
        },
        reference: ReferenceHandle::EulerContact,
        eval: EvalGrid::TimeSlice { n: 512, t: 2.0 },
    }
}

fn poisson_lshape() -> ProblemDescriptor {
    let domain = Domain::l_shape();
    ProblemDescriptor {
        name: "poisson-lshape",
        domain,
        residual: ResidualForm::Poisson { source: Arc::new(|_| 1.0) },
        constraints: vec![ConstraintSpec {
            name: "bc",
            sampler: ConstraintSampler::Boundary(FaceSelector::SpatialBoundary),
            count: 120,
            target: Arc::new(|_| vec![0.0]),
        }],
        extras: vec![],
        arch: MlpArchitecture::new(2, 1, 4, 40).expect("static arch"),
        schedule: PhaseSchedule {
            adam: AdamConfig::with_lr(1e-3),
            adam_max_epochs: 10_000,
            switch_loss_threshold: 1e-3,
            lbfgs_activation: LbfgsActivation::OnlyIfLossBelow { threshold: 1e-3 },
            lbfgs: LbfgsConfig { max_iterations: 2000, ..LbfgsConfig::default() },
        },
        reference: ReferenceHandle::LshapeFiniteDifference { resolution: 200 },
        eval: EvalGrid::MaskedNodes { resolution: 200 },
    }
}

fn poisson_hd(d: usize) -> Result<ProblemDescriptor> {
    if d < 1 {
        return Err(Error::config("poisson-hd dimension must be at least 1"));
    }
    let domain = Domain::hypercube(d);
    Ok(ProblemDescriptor {
        name: "poisson-hd",
        domain,
        residual: ResidualForm::Poisson {
            source: Arc::new(move |x: &[f64]| highd_source(x, d)),
        },
        constraints: vec![ConstraintSpec {
            name: "bc",
            sampler: ConstraintSampler::Boundary(FaceSelector::SpatialBoundary),
            count: 400 * 2 * d,
            // exact trace e^{−10‖x‖²} (≤ e^{−10} on ∂Ω) rather than literal 0
            target: Arc::new(|p| vec![highd_exact(p)]),
        }],
        extras: vec![],
        arch: MlpArchitecture::new(d, 1, 6, 40).expect("static arch"),
        schedule: PhaseSchedule {
            adam: AdamConfig::with_lr(8e-4),
            adam_max_epochs: 10_000,
            switch_loss_threshold: 1e-4,
            lbfgs_activation: LbfgsActivation::OnlyIfLossBelow { threshold: 1e-4 },
            lbfgs: LbfgsConfig { max_iterations: 1000, ..LbfgsConfig::default() },
        },
        reference: ReferenceHandle::HighdExact,
        eval: EvalGrid::RandomPoints { n: 100_000, seed: 42 },
    })
}
