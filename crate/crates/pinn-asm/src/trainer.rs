//! The composite PINN loss and the outer adaptive-sampling loop.
//!
//! The loss is `ω_R·Loss_R + ω_D·Loss_data`: the mean over collocation
//! points of the summed squared residual components, plus the pooled mean
//! over all constraint sets of squared data mismatches. Gradients are exact:
//! each point contributes through the jet evaluator's reverse pass, seeded
//! with the residual operator's partials, and trainable extras (ν̂) receive
//! their share at the residual level.
//!
//! Parallel reductions are deterministic: points are split into fixed chunks,
//! per-chunk partial sums are collected in order and combined sequentially,
//! so a report replays bit-for-bit regardless of thread count.

use crate::autodiff::{JetEvaluator, Objective};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::geometry::{gauss_legendre, make_subdomains, Domain, SubdomainGrid};
use crate::metrics::{relative_l2, relative_linf};
use crate::network::{init_xavier, save_checkpoint, MlpArchitecture, ParameterVector};
use crate::optim::run_phase_schedule;
use crate::problems::{
    ConstraintSampler, EvalGrid, ProblemDescriptor, ReferenceHandle, ResidualForm, ResidualSeeds,
};
use crate::report::{
    write_added_points, write_point_set, AddedPoint, IterationRecord, MetricsRecord, RunStatus,
    RunTraces, TrainReport,
};
use crate::rng::{stream, Stream};
use crate::sampler::{
    asm3_boundary_select, asm_select, check_stop, compute_stats, AsmVariant, PointSet, PointStat,
    StatFn, SubdomainStats,
};
use rayon::prelude::*;
use std::sync::Mutex;

/// Weights of the loss terms; per-set multipliers ride on [`DataSet::weight`].
#[derive(Debug, Clone, PartialEq)]
pub struct LossWeights {
    pub residual: f64,
    pub data: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { residual: 1.0, data: 1.0 }
    }
}

/// One constraint set: flattened points and per-point target vectors.
#[derive(Debug, Clone)]
pub struct DataSet {
    pub name: String,
    pub points: Vec<f64>,
    pub targets: Vec<f64>,
    pub n: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossComponents {
    pub residual: f64,
    pub data: f64,
}

/// The composite loss as an [`Objective`] over the flat parameter vector.
pub struct PinnLoss<'a> {
    arch: &'a MlpArchitecture,
    form: &'a ResidualForm,
    dim: usize,
    out_dim: usize,
    n_extras: usize,
    extras_offset: usize,
    template: ParameterVector,
    second_axes: Vec<bool>,
    res_points: Vec<f64>,
    n_res: usize,
    data: Vec<DataSet>,
    weights: LossWeights,
    /// Total scalar mismatch terms across sets.
    n_data_terms: usize,
    components: Mutex<LossComponents>,
}

fn chunk_ranges(n: usize, target_chunks: usize) -> Vec<(usize, usize)> {
    let chunks = target_chunks.clamp(1, n.max(1));
    let base = n / chunks;
    let rem = n % chunks;
    let mut out = Vec::with_capacity(chunks);
    let mut start = 0;
    for c in 0..chunks {
        let len = base + usize::from(c < rem);
        if len > 0 {
            out.push((start, start + len));
        }
        start += len;
    }
    out
}

impl<'a> PinnLoss<'a> {
    pub fn new(
        desc: &'a ProblemDescriptor,
        extras: &[(String, f64)],
        res_points: Vec<f64>,
        data: Vec<DataSet>,
        weights: LossWeights,
    ) -> Result<Self> {
        let dim = desc.domain.dim();
        let n_res = res_points.len() / dim;
        if n_res == 0 {
            return Err(Error::config("residual point set is empty"));
        }
        for s in &data {
            if s.n == 0 {
                return Err(Error::config(format!("constraint set '{}' is empty", s.name)));
            }
        }
        let out_dim = desc.residual.output_dim();
        let n_data_terms: usize = data.iter().map(|s| s.n * out_dim).sum();
        let template = ParameterVector::zeros(desc.arch.clone(), extras);
        Ok(PinnLoss {
            arch: &desc.arch,
            form: &desc.residual,
            dim,
            out_dim,
            n_extras: extras.len(),
            extras_offset: template.extras_offset(),
            template,
            second_axes: desc.residual.second_axes(dim),
            res_points,
            n_res,
            data,
            weights,
            n_data_terms,
            components: Mutex::new(LossComponents { residual: 0.0, data: 0.0 }),
        })
    }

    /// Loss components of the most recent evaluation.
    pub fn last_components(&self) -> LossComponents {
        *self.components.lock().unwrap()
    }

    /// Number of collocation points currently in the residual term.
    pub fn n_residual_points(&self) -> usize {
        self.n_res
    }

    /// Total loss and its components, without gradient work.
    pub fn total_loss(&self, params: &[f64]) -> Result<(f64, LossComponents)> {
        let mut pv = self.template.clone();
        pv.set_from(params);
        let extras = &params[self.extras_offset..];
        let d = self.dim;
        let m = self.form.components();
        let res_sq: f64 = chunk_ranges(self.n_res, 16)
            .par_iter()
            .map(|&(a, b)| {
                let mut eval = JetEvaluator::new(self.arch.clone(), self.second_axes.clone());
                let mut res = vec![0.0; m];
                let mut acc = 0.0;
                for i in a..b {
                    eval.forward(&pv, &self.res_points[i * d..(i + 1) * d]);
                    self.form.eval(&eval, d, extras, &mut res);
                    acc += res.iter().map(|r| r * r).sum::<f64>();
                }
                acc
            })
            .collect::<Vec<f64>>()
            .into_iter()
            .sum();
        let mut data_sq = 0.0;
        for set in &self.data {
            let sq: f64 = chunk_ranges(set.n, 8)
                .par_iter()
                .map(|&(a, b)| {
                    let mut eval = JetEvaluator::value_only(self.arch.clone());
                    let mut acc = 0.0;
                    for i in a..b {
                        eval.forward(&pv, &set.points[i * d..(i + 1) * d]);
                        for k in 0..self.out_dim {
                            let e = eval.output(k) - set.targets[i * self.out_dim + k];
                            acc += e * e;
                        }
                    }
                    acc
                })
                .collect::<Vec<f64>>()
                .into_iter()
                .sum();
            data_sq += set.weight * sq;
        }
        let comp = LossComponents {
            residual: self.weights.residual * res_sq / self.n_res as f64,
            data: if self.n_data_terms == 0 {
                0.0
            } else {
                self.weights.data * data_sq / self.n_data_terms as f64
            },
        };
        *self.components.lock().unwrap() = comp;
        Ok((comp.residual + comp.data, comp))
    }

    /// Per-thread residual/gradient-norm evaluator for sampling statistics.
    pub fn stat_factory<'b>(&'b self, params: &'b ParameterVector) -> impl Fn() -> StatFn<'b> + Sync + 'b {
        move || {
            let mut eval = JetEvaluator::new(self.arch.clone(), self.second_axes.clone());
            let mut res = vec![0.0; self.form.components()];
            let extras = &params.as_slice()[self.extras_offset..];
            Box::new(move |x: &[f64]| {
                eval.forward(params, x);
                self.form.eval(&eval, self.dim, extras, &mut res);
                PointStat {
                    residual_mag: self.form.magnitude(&res),
                    grad_norm: eval.grad_norm_sq().sqrt(),
                }
            })
        }
    }
}

impl Objective for PinnLoss<'_> {
    fn dim(&self) -> usize {
        self.template.len()
    }

    fn value_and_grad(&self, params: &[f64], grad: &mut [f64]) -> Result<f64> {
        let mut pv = self.template.clone();
        pv.set_from(params);
        let extras = &params[self.extras_offset..];
        let d = self.dim;
        let k_out = self.out_dim;
        let m = self.form.components();
        let n_params = self.template.len();
        grad.iter_mut().for_each(|g| *g = 0.0);

        // residual term
        let w_res = self.weights.residual;
        let n_res_f = self.n_res as f64;
        let partials: Vec<(f64, Vec<f64>)> = chunk_ranges(self.n_res, 16)
            .par_iter()
            .map(|&(a, b)| {
                let mut eval = JetEvaluator::new(self.arch.clone(), self.second_axes.clone());
                let mut res = vec![0.0; m];
                let mut coeff = vec![0.0; m];
                let mut seeds = ResidualSeeds::zeros(k_out, d, self.n_extras);
                let mut seedbuf = vec![0.0; eval.seed_len()];
                let mut g = vec![0.0; n_params];
                let mut sq = 0.0;
                for i in a..b {
                    eval.forward(&pv, &self.res_points[i * d..(i + 1) * d]);
                    self.form.eval(&eval, d, extras, &mut res);
                    for mm in 0..m {
                        sq += res[mm] * res[mm];
                        coeff[mm] = 2.0 * w_res * res[mm] / n_res_f;
                    }
                    seeds.clear();
                    self.form.add_seeds(&eval, d, extras, &coeff, &mut seeds);
                    seedbuf.iter_mut().for_each(|v| *v = 0.0);
                    for k in 0..k_out {
                        seedbuf[eval.seed_value(k)] = seeds.wrt_value[k];
                        for j in 0..d {
                            seedbuf[eval.seed_d1(k, j)] = seeds.wrt_d1[k * d + j];
                            if self.second_axes[j] {
                                seedbuf[eval.seed_d2(k, j)] = seeds.wrt_d2[k * d + j];
                            }
                        }
                    }
                    eval.backward_params(&pv, &seedbuf, &mut g);
                    for e in 0..self.n_extras {
                        g[self.extras_offset + e] += seeds.wrt_extras[e];
                    }
                }
                (sq, g)
            })
            .collect();
        let mut res_sq = 0.0;
        for (sq, g) in &partials {
            res_sq += sq;
            for (gi, pi) in grad.iter_mut().zip(g) {
                *gi += pi;
            }
        }

        // data terms
        let mut data_sq = 0.0;
        if self.n_data_terms > 0 {
            let w_data = self.weights.data;
            let n_terms = self.n_data_terms as f64;
            for set in &self.data {
                let partials: Vec<(f64, Vec<f64>)> = chunk_ranges(set.n, 8)
                    .par_iter()
                    .map(|&(a, b)| {
                        let mut eval = JetEvaluator::value_only(self.arch.clone());
                        let mut seedbuf = vec![0.0; eval.seed_len()];
                        let mut g = vec![0.0; n_params];
                        let mut sq = 0.0;
                        for i in a..b {
                            eval.forward(&pv, &set.points[i * d..(i + 1) * d]);
                            seedbuf.iter_mut().for_each(|v| *v = 0.0);
                            for k in 0..k_out {
                                let e = eval.output(k) - set.targets[i * k_out + k];
                                sq += e * e;
                                seedbuf[eval.seed_value(k)] =
                                    2.0 * w_data * set.weight * e / n_terms;
                            }
                            eval.backward_params(&pv, &seedbuf, &mut g);
                        }
                        (sq, g)
                    })
                    .collect();
                for (sq, g) in &partials {
                    data_sq += set.weight * sq;
                    for (gi, pi) in grad.iter_mut().zip(g) {
                        *gi += pi;
                    }
                }
            }
        }

        let comp = LossComponents {
            residual: w_res * res_sq / n_res_f,
            data: if self.n_data_terms == 0 {
                0.0
            } else {
                self.weights.data * data_sq / self.n_data_terms as f64
            },
        };
        *self.components.lock().unwrap() = comp;
        Ok(comp.residual + comp.data)
    }
}

/// Fixed evaluation points and reference values for error metrics.
pub struct Evaluation {
    pub points: Vec<f64>,
    pub n: usize,
    pub reference: Vec<f64>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Build the evaluation grid and its reference field for a problem.
pub fn build_evaluation(desc: &ProblemDescriptor) -> Result<Evaluation> {
    match &desc.eval {
        EvalGrid::SpaceTime { nx, nt } => {
            let ax = &desc.domain.axes()[0];
            let at = &desc.domain.axes()[1];
            let xs = linspace(ax.lo, ax.hi, *nx);
            let ts = linspace(at.lo, at.hi, *nt);
            let mut points = Vec::with_capacity(nx * nt * 2);
            for t in &ts {
                for x in &xs {
                    points.push(*x);
                    points.push(*t);
                }
            }
            let nu = match desc.reference {
                ReferenceHandle::BurgersColeHopf { nu } => nu,
                _ => return Err(Error::config("space-time eval expects a Burgers reference")),
            };
            let key =
                format!("burgers/cole-hopf/gh100/nx={nx},nt={nt},nu_bits={}", nu.to_bits());
            let pts = points.clone();
            let reference = crate::reference::cached_or_compute(&key, move || {
                Ok(pts
                    .par_chunks(2)
                    .map(|p| crate::reference::burgers_reference(p[0], p[1], nu))
                    .collect())
            })?;
            Ok(Evaluation { points, n: nx * nt, reference })
        }
        EvalGrid::TimeSlice { n, t } => {
            let ax = &desc.domain.axes()[0];
            let xs = linspace(ax.lo, ax.hi, *n);
            let mut points = Vec::with_capacity(n * 2);
            let mut reference = Vec::with_capacity(*n);
            for x in &xs {
                points.push(*x);
                points.push(*t);
                let (rho, _, _) = crate::reference::euler_exact(*x, *t);
                reference.push(rho);
            }
            Ok(Evaluation { points, n: *n, reference })
        }
        EvalGrid::MaskedNodes { resolution } => {
            let field = crate::reference::lshape_reference(*resolution)?;
            let n_axis = field.nodes_per_axis();
            let mut points = Vec::new();
            let mut reference = Vec::new();
            for iy in 0..n_axis {
                for ix in 0..n_axis {
                    if field.in_domain(ix, iy) {
                        points.push(field.coord(ix));
                        points.push(field.coord(iy));
                        reference.push(field.value(ix, iy));
                    }
                }
            }
            let n = reference.len();
            Ok(Evaluation { points, n, reference })
        }
        EvalGrid::RandomPoints { n, seed } => {
            let mut rng = stream(*seed, Stream::Eval);
            let pts = desc.domain.sample_interior(*n, &mut rng);
            let d = desc.domain.dim();
            let mut points = Vec::with_capacity(n * d);
            let mut reference = Vec::with_capacity(*n);
            for p in &pts {
                points.extend_from_slice(p);
                reference.push(crate::reference::highd_exact(p));
            }
            Ok(Evaluation { points, n: *n, reference })
        }
    }
}

/// First network output on the evaluation points (u, or ρ for Euler).
pub fn predict(arch: &MlpArchitecture, params: &ParameterVector, eval: &Evaluation) -> Vec<f64> {
    let d = arch.input_dim;
    eval.points
        .par_chunks(256 * d)
        .map(|chunk| {
            let mut jet = JetEvaluator::value_only(arch.clone());
            chunk
                .chunks(d)
                .map(|x| {
                    jet.forward(params, x);
                    jet.output(0)
                })
                .collect::<Vec<f64>>()
        })
        .flatten()
        .collect()
}

/// Midpoint of the steepest-descent band of a profile sampled at `xs`:
/// the maximal run around the most negative slope where the slope stays
/// within half of it.
pub fn contact_location(xs: &[f64], profile: &[f64]) -> Option<f64> {
    if xs.len() < 3 {
        return None;
    }
    let slopes: Vec<f64> = xs
        .windows(2)
        .zip(profile.windows(2))
        .map(|(x, p)| (p[1] - p[0]) / (x[1] - x[0]))
        .collect();
    let (imin, smin) = slopes
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())?;
    if *smin >= 0.0 {
        return None;
    }
    let half = 0.5 * smin;
    let mut lo = imin;
    while lo > 0 && slopes[lo - 1] <= half {
        lo -= 1;
    }
    let mut hi = imin;
    while hi + 1 < slopes.len() && slopes[hi + 1] <= half {
        hi += 1;
    }
    Some(0.5 * (xs[lo] + xs[hi + 1]))
}

fn iteration_metrics(
    desc: &ProblemDescriptor,
    params: &ParameterVector,
    eval: &Evaluation,
) -> Result<MetricsRecord> {
    let pred = predict(&desc.arch, params, eval);
    let l2 = relative_l2(&pred, &eval.reference)?;
    let linf = relative_linf(&pred, &eval.reference)?;
    let contact = match desc.eval {
        EvalGrid::TimeSlice { .. } => {
            let xs: Vec<f64> = eval.points.chunks(2).map(|p| p[0]).collect();
            contact_location(&xs, &pred)
        }
        _ => None,
    };
    Ok(MetricsRecord { relative_l2: l2, relative_linf: linf, contact_location: contact })
}

fn extras_values(params: &ParameterVector) -> Vec<(String, f64)> {
    params
        .extras_names()
        .iter()
        .map(|n| (n.clone(), params.extra(n).expect("extra present")))
        .collect()
}

/// Monte-Carlo fallback statistics for the no-decomposition mode: means of
/// |R| and |∇u| over a fresh uniform sample.
fn global_stats(
    loss: &PinnLoss<'_>,
    params: &ParameterVector,
    domain: &Domain,
    n: usize,
    rng: &mut impl rand::Rng,
    need_grad: bool,
) -> SubdomainStats {
    let pts = domain.sample_interior(n, rng);
    let factory = loss.stat_factory(params);
    let stats: Vec<PointStat> = pts
        .par_chunks(512)
        .map_init(
            || factory(),
            |g, chunk| chunk.iter().map(|x| g(x)).collect::<Vec<_>>(),
        )
        .flatten()
        .collect();
    let rmean = stats.iter().map(|s| s.residual_mag).sum::<f64>() / n as f64;
    let gmean = stats.iter().map(|s| s.grad_norm).sum::<f64>() / n as f64;
    SubdomainStats {
        residual_mean: vec![rmean],
        gradient_mean: need_grad.then(|| vec![gmean]),
        argmax_residual: 0,
        argmax_gradient: need_grad.then_some(0),
        e_max: rmean,
        grad_max: need_grad.then_some(gmean),
    }
}

/// Run one experiment to completion. Deterministic given `(config, seed)`.
///
/// Divergence does not error: the report carries a `Diverged` status and the
/// partial iteration trace.
pub fn run_experiment(cfg: &ExperimentConfig, seed: u64) -> Result<TrainReport> {
    cfg.validate()?;
    let desc = cfg.descriptor()?;
    let asm = cfg.asm_config();
    let dim = desc.domain.dim();
    let weights = LossWeights { residual: cfg.weight_residual, data: cfg.weight_data };

    let mut interior_rng = stream(seed, Stream::Interior);
    let mut boundary_rng = stream(seed, Stream::Boundary);
    let mut data_rng = stream(seed, Stream::Data);
    let mut cand_rng = stream(seed, Stream::Candidates);

    // initial sets
    let mut residual_set = PointSet::initial(desc.domain.sample_interior(cfg.n_residual, &mut interior_rng));
    // boundary growth (ASM III) applies to the set named "bc"
    let mut constraint_sets: Vec<(usize, PointSet)> = Vec::new();
    for (ci, c) in desc.constraints.iter().enumerate() {
        let pts = match &c.sampler {
            ConstraintSampler::Interior => desc.domain.sample_interior(c.count, &mut data_rng),
            ConstraintSampler::Boundary(sel) => {
                desc.domain.sample_boundary(c.count, &mut boundary_rng, sel)?
            }
        };
        constraint_sets.push((ci, PointSet::initial(pts)));
    }

    let mut params = init_xavier(&desc.arch, &desc.extras, seed)?;
    let grid: Option<SubdomainGrid> = match &cfg.subdomains {
        Some(counts) => Some(make_subdomains(&desc.domain, counts)?),
        None => None,
    };
    let rule = gauss_legendre(cfg.quadrature)?;
    let evaluation = build_evaluation(&desc)?;

    let run_dir = cfg.run_dir(seed);
    let mut traces = match &run_dir {
        Some(dir) => {
            let extras_names: Vec<String> = desc.extras.iter().map(|(n, _)| n.clone()).collect();
            Some(RunTraces::create(dir, &desc.domain.axis_names(), &extras_names)?)
        }
        None => None,
    };

    let need_grad = matches!(asm.variant, AsmVariant::Asm2 | AsmVariant::Asm3);
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut status = RunStatus::Completed;
    let mut iteration = 0usize;

    loop {
        // assemble the loss over the current sets
        let data_sets: Vec<DataSet> = constraint_sets
            .iter()
            .map(|(ci, set)| {
                let c = &desc.constraints[*ci];
                let mut targets = Vec::with_capacity(set.len() * desc.residual.output_dim());
                for p in set.coords() {
                    targets.extend((c.target)(p));
                }
                DataSet {
                    name: c.name.to_string(),
                    points: set.flat(dim),
                    targets,
                    n: set.len(),
                    weight: 1.0,
                }
            })
            .collect();
        let loss = PinnLoss::new(&desc, &desc.extras, residual_set.flat(dim), data_sets, weights.clone())?;

        // training phase
        let extras_offset = params.extras_offset();
        let mut flat = params.as_slice().to_vec();
        let trace_cell = std::cell::RefCell::new(&mut traces);
        let schedule_out = run_phase_schedule(&desc.schedule, &loss, &mut flat, |phase, _, l, p| {
            if let Some(tr) = trace_cell.borrow_mut().as_mut() {
                let c = loss.last_components();
                let _ = tr.record(phase.as_str(), l, c.residual, c.data);
                if !desc.extras.is_empty() {
                    let _ = tr.record_extras(&p[extras_offset..]);
                }
            }
            let _ = phase;
        });
        params.set_from(&flat);
        let (adam_epochs, lbfgs_iterations, final_loss) = match schedule_out {
            Ok(out) => (out.adam_epochs, out.lbfgs_iterations, out.final_loss),
            Err(Error::Divergence { epoch, detail }) => {
                status = RunStatus::Diverged { epoch, detail };
                (0, 0, f64::NAN)
            }
            Err(e) => return Err(e),
        };
        if matches!(status, RunStatus::Diverged { .. }) {
            break;
        }
        let components = loss.last_components();

        // per-iteration checkpoint
        if let (Some(dir), true) = (&run_dir, cfg.checkpoints) {
            save_checkpoint(&dir.join(format!("params_iter_{iteration}.ckpt")), &params)?;
        }

        // subdomain statistics
        let stats = match &grid {
            Some(grid) => {
                let factory = loss.stat_factory(&params);
                compute_stats(&factory, grid, &rule, need_grad)
            }
            None => {
                let n_mc = asm.candidates.min(50_000).max(1000);
                global_stats(&loss, &params, &desc.domain, n_mc, &mut cand_rng, need_grad)
            }
        };

        let metrics = iteration_metrics(&desc, &params, &evaluation)?;
        let mut record = IterationRecord {
            iteration,
            adam_epochs,
            lbfgs_iterations,
            loss: final_loss,
            loss_residual: components.residual,
            loss_data: components.data,
            e_max: stats.e_max,
            grad_max: stats.grad_max,
            n_residual_points: loss.n_residual_points(),
            n_boundary_points: constraint_sets.iter().map(|(_, s)| s.len()).sum(),
            added: Vec::new(),
            metrics,
            extras: extras_values(&params),
        };

        if check_stop(stats.e_max, &asm, iteration) {
            records.push(record);
            break;
        }

        // grow the sets
        let factory = loss.stat_factory(&params);
        let new_points = asm_select(
            &stats,
            &factory,
            grid.as_ref(),
            &desc.domain,
            &asm,
            iteration,
            &mut cand_rng,
        )?;
        record.added.extend(new_points.iter().filter_map(AddedPoint::from_tagged));
        if asm.variant == AsmVariant::Asm3 {
            // grow the homogeneous-Dirichlet boundary set by largest |ũ|
            let bc_index = desc
                .constraints
                .iter()
                .position(|c| c.name == "bc")
                .ok_or_else(|| Error::config("ASM III requires a 'bc' constraint set"))?;
            let selector = match &desc.constraints[bc_index].sampler {
                ConstraintSampler::Boundary(sel) => sel.clone(),
                ConstraintSampler::Interior => {
                    return Err(Error::config("ASM III 'bc' set must sample the boundary"))
                }
            };
            let arch = desc.arch.clone();
            let pr = &params;
            let abs_u = move || -> StatFn<'_> {
                let mut jet = JetEvaluator::value_only(arch.clone());
                Box::new(move |x: &[f64]| {
                    jet.forward(pr, x);
                    PointStat { residual_mag: jet.output(0).abs(), grad_norm: 0.0 }
                })
            };
            let bc_new =
                asm3_boundary_select(&abs_u, &desc.domain, &selector, &asm, iteration, &mut cand_rng)?;
            record.added.extend(bc_new.iter().filter_map(AddedPoint::from_tagged));
            constraint_sets[bc_index].1.extend(bc_new);
        }
        residual_set.extend(new_points);
        records.push(record);
        iteration += 1;
    }

    if let Some(tr) = &mut traces {
        tr.flush()?;
    }

    let added_residual_points = residual_set.added_count();
    let added_boundary_points: usize =
        constraint_sets.iter().map(|(_, s)| s.added_count()).sum();
    let report = TrainReport {
        problem: cfg.problem.clone(),
        variant: asm.variant.as_str().to_string(),
        seed,
        config_hash: cfg.hash(),
        status,
        final_metrics: records.last().map(|r| r.metrics.clone()),
        final_extras: records.last().map(|r| r.extras.clone()).unwrap_or_default(),
        iterations: records,
        added_residual_points,
        added_boundary_points,
    };

    if let Some(dir) = &run_dir {
        report.save(&dir.join("report.json"))?;
        write_added_points(&dir.join("added_points.csv"), &desc.domain.axis_names(), &report)?;
        write_point_set(&dir.join("residual_points.csv"), &desc.domain.axis_names(), &residual_set)?;
        for (ci, set) in &constraint_sets {
            let name = desc.constraints[*ci].name;
            write_point_set(&dir.join(format!("{name}_points.csv")), &desc.domain.axis_names(), set)?;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::descriptor;
    use crate::rng::seeded;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn tiny_burgers_cfg() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::defaults("burgers-fwd", AsmVariant::Asm2).unwrap();
        cfg.depth = 1;
        cfg.width = 8;
        cfg.n_residual = 30;
        cfg.constraint_counts = [("ic".to_string(), 10), ("bc".to_string(), 10)].into();
        cfg.adam_max_epochs = 5;
        cfg.switch_loss_threshold = 1e-9;
        cfg.lbfgs_max_iterations = 3;
        cfg.subdomains = Some(vec![4, 2]);
        cfg.quadrature = 2;
        cfg.candidates = 10;
        cfg.max_iterations = 2;
        cfg
    }

    #[test]
    fn data_loss_of_zero_network_on_ic_points() {
        let desc = descriptor("burgers-fwd", 0).unwrap();
        let mut rng = seeded(4);
        let pts = desc
            .domain
            .sample_boundary(50, &mut rng, &crate::geometry::FaceSelector::InitialTime)
            .unwrap();
        let mut flat = Vec::new();
        let mut targets = Vec::new();
        for p in &pts {
            flat.extend_from_slice(p);
            targets.push(-(std::f64::consts::PI * p[0]).sin());
        }
        let expected: f64 =
            targets.iter().map(|t| t * t).sum::<f64>() / targets.len() as f64;
        let data = vec![DataSet {
            name: "ic".into(),
            points: flat,
            targets,
            n: pts.len(),
            weight: 1.0,
        }];
        // any residual points will do; the zero network has zero residual
        let res_pts = desc.domain.sample_interior(7, &mut rng);
        let loss = PinnLoss::new(
            &desc,
            &[],
            res_pts.concat(),
            data,
            LossWeights::default(),
        )
        .unwrap();
        let zero = ParameterVector::zeros(desc.arch.clone(), &[]);
        let (total, comp) = loss.total_loss(zero.as_slice()).unwrap();
        assert_abs_diff_eq!(comp.data, expected, epsilon = 1e-14);
        assert_abs_diff_eq!(comp.residual, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(total, expected, epsilon = 1e-14);
    }

    #[test]
    fn doubling_residual_weight_doubles_residual_component() {
        let desc = descriptor("burgers-fwd", 0).unwrap();
        let mut rng = seeded(9);
        let res_pts = desc.domain.sample_interior(20, &mut rng);
        let ic = desc
            .domain
            .sample_boundary(5, &mut rng, &crate::geometry::FaceSelector::InitialTime)
            .unwrap();
        let make_data = || {
            vec![DataSet {
                name: "ic".into(),
                points: ic.concat(),
                targets: ic.iter().map(|p| -(std::f64::consts::PI * p[0]).sin()).collect(),
                n: ic.len(),
                weight: 1.0,
            }]
        };
        let params = init_xavier(&desc.arch, &[], 3).unwrap();
        let l1 = PinnLoss::new(&desc, &[], res_pts.concat(), make_data(), LossWeights::default())
            .unwrap();
        let (_, c1) = l1.total_loss(params.as_slice()).unwrap();
        let l2 = PinnLoss::new(
            &desc,
            &[],
            res_pts.concat(),
            make_data(),
            LossWeights { residual: 2.0, data: 1.0 },
        )
        .unwrap();
        let (_, c2) = l2.total_loss(params.as_slice()).unwrap();
        assert_abs_diff_eq!(c2.residual, 2.0 * c1.residual, epsilon = 1e-14);
        assert_abs_diff_eq!(c2.data, c1.data, epsilon = 1e-16);
    }

    #[test]
    fn empty_mandatory_set_is_config_error() {
        let desc = descriptor("burgers-fwd", 0).unwrap();
        let err = PinnLoss::new(&desc, &[], vec![], vec![], LossWeights::default());
        assert!(err.is_err());
    }

    /// FD oracle on the full PINN loss gradient, including ν̂.
    #[test]
    fn pinn_loss_gradient_matches_finite_differences() {
        let mut desc = descriptor("burgers-inv", 0).unwrap();
        desc.arch = MlpArchitecture::new(2, 1, 2, 6).unwrap();
        let extras = vec![("nu_hat".to_string(), 2.0)];
        let mut rng = seeded(31);
        let res_pts = desc.domain.sample_interior(10, &mut rng);
        let dpts = desc.domain.sample_interior(6, &mut rng);
        let data = vec![DataSet {
            name: "data".into(),
            points: dpts.concat(),
            targets: dpts.iter().map(|p| 0.3 * p[0] - 0.1 * p[1]).collect(),
            n: dpts.len(),
            weight: 1.0,
        }];
        let loss =
            PinnLoss::new(&desc, &extras, res_pts.concat(), data, LossWeights::default()).unwrap();
        let params = init_xavier(&desc.arch, &extras, 17).unwrap();
        let mut grad = vec![0.0; params.len()];
        let l0 = loss.value_and_grad(params.as_slice(), &mut grad).unwrap();
        assert!(l0.is_finite());
        let h = 1e-6;
        for trial in 0..30 {
            let i = if trial == 0 { params.len() - 1 } else { rng.gen_range(0..params.len()) };
            let mut pp = params.as_slice().to_vec();
            pp[i] += h;
            let mut pm = params.as_slice().to_vec();
            pm[i] -= h;
            let (fp, _) = loss.total_loss(&pp).unwrap();
            let (fm, _) = loss.total_loss(&pm).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            let rel = (grad[i] - fd).abs() / fd.abs().max(1e-6);
            assert!(rel < 1e-4, "param {i}: analytic {} vs fd {fd} (rel {rel})", grad[i]);
        }
    }

    #[test]
    fn zero_iteration_budget_gives_single_training_phase() {
        let mut cfg = tiny_burgers_cfg();
        cfg.max_iterations = 0;
        let report = run_experiment(&cfg, 5).unwrap();
        assert_eq!(report.iterations.len(), 1);
        assert_eq!(report.added_residual_points, 0);
        assert!(report.iterations[0].added.is_empty());
        assert!(matches!(report.status, RunStatus::Completed));
    }

    #[test]
    fn report_replays_bit_for_bit() {
        let cfg = tiny_burgers_cfg();
        let a = run_experiment(&cfg, 11).unwrap();
        let b = run_experiment(&cfg, 11).unwrap();
        let ja = serde_json::to_vec(&a).unwrap();
        let jb = serde_json::to_vec(&b).unwrap();
        assert_eq!(ja, jb);
        let c = run_experiment(&cfg, 12).unwrap();
        assert_ne!(serde_json::to_vec(&c).unwrap(), ja);
    }

    #[test]
    fn collocation_accounting_matches_point_set() {
        let cfg = tiny_burgers_cfg();
        let report = run_experiment(&cfg, 3).unwrap();
        // 2 points per iteration (m_R = m_∇u = 1), warm-growing
        for (i, rec) in report.iterations.iter().enumerate() {
            assert_eq!(rec.n_residual_points, cfg.n_residual + 2 * i);
        }
        assert_eq!(report.added_residual_points, 2 * (report.iterations.len() - 1));
    }

    #[test]
    fn contact_location_of_sharp_profile() {
        let xs: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
        let profile: Vec<f64> =
            xs.iter().map(|&x| if x < 0.7 { 1.4 } else { 1.0 }).collect();
        let c = contact_location(&xs, &profile).unwrap();
        assert_abs_diff_eq!(c, 0.7, epsilon = 0.011);
        // smooth ramp centered at 0.5
        let profile: Vec<f64> =
            xs.iter().map(|&x| 1.2 - 0.2 * ((x - 0.5) * 30.0).tanh()).collect();
        let c = contact_location(&xs, &profile).unwrap();
        assert_abs_diff_eq!(c, 0.5, epsilon = 0.02);
        // monotone increasing profile has no descent band
        let inc: Vec<f64> = xs.clone();
        assert!(contact_location(&xs, &inc).is_none());
    }
}
