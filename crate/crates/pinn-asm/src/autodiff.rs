//! Exact derivatives of network outputs.
//!
//! Input derivatives (∂u_k/∂x_j and the diagonal second derivatives
//! ∂²u_k/∂x_j²) are propagated forward through the layers as second-order
//! jets: each neuron carries its value, one first-derivative channel per
//! input axis, and one second-derivative channel per requested axis. The
//! chain rule for an activation σ applied to a pre-activation jet
//! (z, z_j, z_jj) is
//!
//! ```text
//! a    = σ(z)
//! a_j  = σ'(z)·z_j
//! a_jj = σ''(z)·z_j² + σ'(z)·z_jj
//! ```
//!
//! and affine layers act channel by channel.
//!
//! Parameter gradients of any scalar built from those jet outputs come from
//! a reverse sweep over the recorded jet computation: the caller provides the
//! partial derivatives of its scalar with respect to every output channel
//! (the *seed*), and [`JetEvaluator::backward_params`] accumulates the exact
//! gradient with respect to all weights and biases. Everything is f64; finite
//! differences appear only in test oracles.

use crate::error::{Error, Result};
use crate::network::{self, MlpArchitecture, ParameterVector};

/// Network outputs and input derivatives at one point.
#[derive(Debug, Clone)]
pub struct EvaluationRecord {
    pub inputs: Vec<f64>,
    /// u_k, length K.
    pub outputs: Vec<f64>,
    /// ∂u_k/∂x_j, row-major K × D.
    pub input_jacobian: Vec<f64>,
    /// ∂²u_k/∂x_j², row-major K × D; present iff second derivatives were requested.
    pub diag_second: Option<Vec<f64>>,
}

impl EvaluationRecord {
    pub fn first(&self, k: usize, j: usize) -> f64 {
        self.input_jacobian[k * self.inputs.len() + j]
    }

    pub fn second(&self, k: usize, j: usize) -> f64 {
        self.diag_second.as_ref().expect("second derivatives not requested")
            [k * self.inputs.len() + j]
    }
}

/// Gradient of a scalar loss with respect to the flat parameter vector.
#[derive(Debug, Clone)]
pub struct ParameterGradient {
    pub loss: f64,
    pub grad: Vec<f64>,
}

/// A scalar function of the flat parameter vector with an exact gradient.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    /// Fill `grad` (length `dim`) and return the loss value.
    fn value_and_grad(&self, params: &[f64], grad: &mut [f64]) -> Result<f64>;

    fn value(&self, params: &[f64]) -> Result<f64> {
        let mut g = vec![0.0; self.dim()];
        self.value_and_grad(params, &mut g)
    }
}

/// Exact gradient of `loss` at `params`; errors if the loss or any gradient
/// component is non-finite so the trainer can surface divergence.
pub fn parameter_gradient(loss: &dyn Objective, params: &[f64]) -> Result<ParameterGradient> {
    let mut grad = vec![0.0; loss.dim()];
    let value = loss.value_and_grad(params, &mut grad)?;
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Divergence { epoch: 0, detail: "non-finite loss or gradient".into() });
    }
    Ok(ParameterGradient { loss: value, grad })
}

/// ũ(x); pure function of (params, x).
pub fn evaluate(params: &ParameterVector, x: &[f64]) -> Result<Vec<f64>> {
    network::forward(params, x)
}

/// Exact input derivatives of the network map at `x`.
pub fn input_derivatives(
    params: &ParameterVector,
    x: &[f64],
    want_second: bool,
) -> Result<EvaluationRecord> {
    let d = params.arch().input_dim;
    if x.len() != d {
        return Err(Error::config(format!(
            "input has dimension {}, network expects {d}",
            x.len()
        )));
    }
    let mask = vec![want_second; d];
    let mut eval = JetEvaluator::new(params.arch().clone(), mask);
    eval.forward(params, x);
    Ok(eval.to_record(x))
}

/// Jet-propagating evaluator with reusable buffers.
///
/// `forward` must be called before any accessor or `backward_params`; the
/// backward pass consumes the state cached by the most recent forward.
pub struct JetEvaluator {
    arch: MlpArchitecture,
    /// First-derivative channels present (one per input axis).
    first: bool,
    /// Which axes carry a second-derivative channel.
    second_axes: Vec<bool>,
    /// Axis index of each second-derivative slot.
    slots: Vec<usize>,
    n_ch: usize,
    /// Point of the most recent forward pass.
    input: Vec<f64>,
    /// Post-activation jets per layer; `a[0]` holds the input jets.
    a: Vec<Vec<f64>>,
    /// Pre-activation jets per hidden layer.
    z: Vec<Vec<f64>>,
    /// (σ', σ'', σ''') per hidden neuron, packed σ'-major.
    sig: Vec<Vec<f64>>,
    /// Output-layer jets, channel-major n_ch × K.
    out: Vec<f64>,
    adj_a: Vec<f64>,
    adj_z: Vec<f64>,
}

impl JetEvaluator {
    pub fn new(arch: MlpArchitecture, second_axes: Vec<bool>) -> Self {
        Self::build(arch, true, second_axes)
    }

    /// Values only: a plain forward/backprop pair, no derivative channels.
    pub fn value_only(arch: MlpArchitecture) -> Self {
        let d = arch.input_dim;
        Self::build(arch, false, vec![false; d])
    }

    fn build(arch: MlpArchitecture, first: bool, second_axes: Vec<bool>) -> Self {
        assert_eq!(second_axes.len(), arch.input_dim);
        let d = arch.input_dim;
        let slots: Vec<usize> =
            second_axes.iter().enumerate().filter(|(_, &m)| m).map(|(j, _)| j).collect();
        assert!(first || slots.is_empty(), "second derivatives require first channels");
        let n_ch = 1 + if first { d } else { 0 } + slots.len();
        let mut a = Vec::with_capacity(arch.depth + 1);
        a.push(vec![0.0; n_ch * d]);
        let mut z = Vec::with_capacity(arch.depth);
        let mut sig = Vec::with_capacity(arch.depth);
        for _ in 0..arch.depth {
            a.push(vec![0.0; n_ch * arch.width]);
            z.push(vec![0.0; n_ch * arch.width]);
            sig.push(vec![0.0; 3 * arch.width]);
        }
        let out = vec![0.0; n_ch * arch.output_dim];
        let wmax = arch.width.max(arch.output_dim).max(d);
        JetEvaluator {
            arch,
            first,
            second_axes,
            slots,
            n_ch,
            input: vec![0.0; d],
            a,
            z,
            sig,
            out,
            adj_a: vec![0.0; n_ch * wmax],
            adj_z: vec![0.0; n_ch * wmax],
        }
    }

    pub fn channels(&self) -> usize {
        self.n_ch
    }

    pub fn second_axes(&self) -> &[bool] {
        &self.second_axes
    }

    /// Channel-major affine transform: `dst[c] = W src[c] (+ b for c = 0)`.
    fn affine(&self, w: &[f64], b: &[f64], src: &[f64], dst: &mut [f64], fi: usize, fo: usize) {
        for c in 0..self.n_ch {
            let sa = &src[c * fi..(c + 1) * fi];
            let da = &mut dst[c * fo..(c + 1) * fo];
            for o in 0..fo {
                let row = &w[o * fi..(o + 1) * fi];
                let mut acc = 0.0;
                for (wi, si) in row.iter().zip(sa.iter()) {
                    acc += wi * si;
                }
                da[o] = if c == 0 { acc + b[o] } else { acc };
            }
        }
    }

    pub fn forward(&mut self, params: &ParameterVector, x: &[f64]) {
        let d = self.arch.input_dim;
        debug_assert_eq!(x.len(), d);
        self.input.copy_from_slice(x);
        // input jets: value = x, first channels = unit directions, seconds = 0
        let a0 = &mut self.a[0];
        a0.iter_mut().for_each(|v| *v = 0.0);
        a0[..d].copy_from_slice(x);
        if self.first {
            for j in 0..d {
                a0[(1 + j) * d + j] = 1.0;
            }
        }
        let dims = self.arch.layer_dims();
        let act = self.arch.activation;
        for l in 0..self.arch.depth {
            let (fi, fo) = dims[l];
            let w = params.layer_weights(l);
            let b = params.layer_biases(l);
            let (head, tail) = self.a.split_at_mut(l + 1);
            let src = &head[l];
            let zl = &mut self.z[l];
            // affine into z
            for c in 0..self.n_ch {
                let sa = &src[c * fi..(c + 1) * fi];
                let da = &mut zl[c * fo..(c + 1) * fo];
                for o in 0..fo {
                    let row = &w[o * fi..(o + 1) * fi];
                    let mut acc = 0.0;
                    for (wi, si) in row.iter().zip(sa.iter()) {
                        acc += wi * si;
                    }
                    da[o] = if c == 0 { acc + b[o] } else { acc };
                }
            }
            // activation on jets
            let al = &mut tail[0];
            let sg = &mut self.sig[l];
            for i in 0..fo {
                let (v, s1, s2, s3) = act.derivatives(zl[i]);
                al[i] = v;
                sg[i] = s1;
                sg[fo + i] = s2;
                sg[2 * fo + i] = s3;
            }
            if self.first {
                for j in 0..d {
                    let zc = (1 + j) * fo;
                    for i in 0..fo {
                        al[zc + i] = sg[i] * zl[zc + i];
                    }
                }
            }
            for (s, &axis) in self.slots.iter().enumerate() {
                let zc = (1 + axis) * fo;
                let sc = (1 + d + s) * fo;
                for i in 0..fo {
                    let zj = zl[zc + i];
                    al[sc + i] = sg[fo + i] * zj * zj + sg[i] * zl[sc + i];
                }
            }
        }
        // linear output layer
        let l = self.arch.depth;
        let (fi, fo) = dims[l];
        let w = params.layer_weights(l);
        let b = params.layer_biases(l);
        let src = &self.a[l];
        let mut out = std::mem::take(&mut self.out);
        self.affine(w, b, src, &mut out, fi, fo);
        self.out = out;
    }

    pub fn output(&self, k: usize) -> f64 {
        self.out[k]
    }

    /// Point of the most recent forward pass.
    pub fn input(&self) -> &[f64] {
        &self.input
    }

    /// ∂u_k/∂x_j.
    pub fn d1(&self, k: usize, j: usize) -> f64 {
        debug_assert!(self.first, "evaluator built without derivative channels");
        self.out[(1 + j) * self.arch.output_dim + k]
    }

    /// ∂²u_k/∂x_j²; the axis must be in the second-derivative mask.
    pub fn d2(&self, k: usize, j: usize) -> f64 {
        let s = self.slots.iter().position(|&a| a == j).expect("axis has no second channel");
        self.out[(1 + self.arch.input_dim + s) * self.arch.output_dim + k]
    }

    /// Squared Euclidean norm of all outputs' input gradients.
    pub fn grad_norm_sq(&self) -> f64 {
        debug_assert!(self.first, "evaluator built without derivative channels");
        let d = self.arch.input_dim;
        let k = self.arch.output_dim;
        let mut acc = 0.0;
        for c in 1..=d {
            for v in &self.out[c * k..(c + 1) * k] {
                acc += v * v;
            }
        }
        acc
    }

    pub fn to_record(&self, x: &[f64]) -> EvaluationRecord {
        let d = self.arch.input_dim;
        let k = self.arch.output_dim;
        let outputs = self.out[..k].to_vec();
        let mut jac = vec![0.0; k * d];
        for kk in 0..k {
            for j in 0..d {
                jac[kk * d + j] = self.d1(kk, j);
            }
        }
        let diag_second = if self.slots.len() == d {
            let mut sec = vec![0.0; k * d];
            for kk in 0..k {
                for j in 0..d {
                    sec[kk * d + j] = self.d2(kk, j);
                }
            }
            Some(sec)
        } else {
            None
        };
        EvaluationRecord { inputs: x.to_vec(), outputs, input_jacobian: jac, diag_second }
    }

    /// Index of the value seed of output `k` in a seed buffer.
    pub fn seed_value(&self, k: usize) -> usize {
        k
    }

    /// Index of the ∂u_k/∂x_j seed.
    pub fn seed_d1(&self, k: usize, j: usize) -> usize {
        debug_assert!(self.first, "evaluator built without derivative channels");
        (1 + j) * self.arch.output_dim + k
    }

    /// Index of the ∂²u_k/∂x_j² seed.
    pub fn seed_d2(&self, k: usize, j: usize) -> usize {
        let s = self.slots.iter().position(|&a| a == j).expect("axis has no second channel");
        (1 + self.arch.input_dim + s) * self.arch.output_dim + k
    }

    pub fn seed_len(&self) -> usize {
        self.n_ch * self.arch.output_dim
    }

    /// Reverse sweep: given ∂G/∂(output channels) in `seed`, accumulate
    /// ∂G/∂(weights, biases) into `grad` (ParameterVector layout). Must follow
    /// a `forward` at the same parameters and point.
    pub fn backward_params(&mut self, params: &ParameterVector, seed: &[f64], grad: &mut [f64]) {
        let d = self.arch.input_dim;
        let dims = self.arch.layer_dims();
        let n_ch = self.n_ch;

        // output affine layer
        let l = self.arch.depth;
        let (fi, fo) = dims[l];
        let w = params.layer_weights(l);
        let off = params.layer_offset(l);
        {
            let src = &self.a[l];
            let (gw, gb) = grad[off..off + fo * fi + fo].split_at_mut(fo * fi);
            for c in 0..n_ch {
                let zb = &seed[c * fo..(c + 1) * fo];
                let sa = &src[c * fi..(c + 1) * fi];
                for o in 0..fo {
                    let coef = zb[o];
                    if coef != 0.0 {
                        let gr = &mut gw[o * fi..(o + 1) * fi];
                        for (g, s) in gr.iter_mut().zip(sa.iter()) {
                            *g += coef * s;
                        }
                    }
                }
            }
            for o in 0..fo {
                gb[o] += seed[o];
            }
            // adjoint of the last hidden activations
            let adj = &mut self.adj_a[..n_ch * fi];
            adj.iter_mut().for_each(|v| *v = 0.0);
            for c in 0..n_ch {
                let zb = &seed[c * fo..(c + 1) * fo];
                let aa = &mut adj[c * fi..(c + 1) * fi];
                for o in 0..fo {
                    let coef = zb[o];
                    if coef != 0.0 {
                        let row = &w[o * fi..(o + 1) * fi];
                        for (a, wi) in aa.iter_mut().zip(row.iter()) {
                            *a += coef * wi;
                        }
                    }
                }
            }
        }

        // hidden layers, reverse order
        for l in (0..self.arch.depth).rev() {
            let (fi, fo) = dims[l];
            let zl = &self.z[l];
            let sg = &self.sig[l];
            // activation adjoint: adj_a (n_ch × fo) -> adj_z (n_ch × fo)
            {
                let adj_a = &self.adj_a[..n_ch * fo];
                let adj_z = &mut self.adj_z[..n_ch * fo];
                // value channel
                for i in 0..fo {
                    adj_z[i] = adj_a[i] * sg[i];
                }
                // first-derivative channels
                if self.first {
                    for j in 0..d {
                        let c = (1 + j) * fo;
                        for i in 0..fo {
                            let aj = adj_a[c + i];
                            adj_z[c + i] = aj * sg[i];
                            adj_z[i] += aj * sg[fo + i] * zl[c + i];
                        }
                    }
                }
                // second-derivative channels
                for (s, &axis) in self.slots.iter().enumerate() {
                    let cj = (1 + axis) * fo;
                    let cs = (1 + d + s) * fo;
                    for i in 0..fo {
                        let ajj = adj_a[cs + i];
                        if ajj != 0.0 {
                            let zj = zl[cj + i];
                            adj_z[cs + i] = ajj * sg[i];
                            adj_z[cj + i] += ajj * 2.0 * sg[fo + i] * zj;
                            adj_z[i] += ajj * (sg[2 * fo + i] * zj * zj + sg[fo + i] * zl[cs + i]);
                        } else {
                            adj_z[cs + i] = 0.0;
                        }
                    }
                }
            }
            // affine adjoint
            let w = params.layer_weights(l);
            let off = params.layer_offset(l);
            let src = &self.a[l];
            let (gw, gb) = grad[off..off + fo * fi + fo].split_at_mut(fo * fi);
            for c in 0..n_ch {
                let zb = &self.adj_z[c * fo..(c + 1) * fo];
                let sa = &src[c * fi..(c + 1) * fi];
                for o in 0..fo {
                    let coef = zb[o];
                    if coef != 0.0 {
                        let gr = &mut gw[o * fi..(o + 1) * fi];
                        for (g, s) in gr.iter_mut().zip(sa.iter()) {
                            *g += coef * s;
                        }
                    }
                }
            }
            for o in 0..fo {
                gb[o] += self.adj_z[o];
            }
            let adj_prev = &mut self.adj_a[..n_ch * fi];
            adj_prev.iter_mut().for_each(|v| *v = 0.0);
            for c in 0..n_ch {
                let zb = &self.adj_z[c * fo..(c + 1) * fo];
                let aa = &mut adj_prev[c * fi..(c + 1) * fi];
                for o in 0..fo {
                    let coef = zb[o];
                    if coef != 0.0 {
                        let row = &w[o * fi..(o + 1) * fi];
                        for (a, wi) in aa.iter_mut().zip(row.iter()) {
                            *a += coef * wi;
                        }
                    }
                }
            }
        }
    }
}
