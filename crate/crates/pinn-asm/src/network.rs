//! Fully connected networks and their parameters.
//!
//! One architecture family covers every benchmark: `depth` hidden layers of
//! `width` neurons with a smooth activation, plus a linear output layer.
//! Trainable physical scalars (for inverse problems) live at the tail of the
//! flat parameter vector and receive gradients like any weight.

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// Smooth activations only; everything here is C^∞.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    /// σ(x) = x. Used to build exact linear maps in tests.
    Identity,
    /// σ(x) = x². Used to build exact low-degree polynomials in tests.
    Square,
}

impl Activation {
    /// Value and first three derivatives at `z`.
    #[inline(always)]
    pub fn derivatives(self, z: f64) -> (f64, f64, f64, f64) {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                let s1 = 1.0 - t * t;
                let s2 = -2.0 * t * s1;
                let s3 = -2.0 * s1 * (1.0 - 3.0 * t * t);
                (t, s1, s2, s3)
            }
            Activation::Identity => (z, 1.0, 0.0, 0.0),
            Activation::Square => (z * z, 2.0 * z, 2.0, 0.0),
        }
    }

    #[inline(always)]
    pub fn value(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
            Activation::Square => z * z,
        }
    }
}

/// Architecture of the fully connected family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpArchitecture {
    pub input_dim: usize,
    pub output_dim: usize,
    /// Number of hidden layers (w in "w × l").
    pub depth: usize,
    /// Neurons per hidden layer (l in "w × l").
    pub width: usize,
    pub activation: Activation,
}

impl MlpArchitecture {
    pub fn new(input_dim: usize, output_dim: usize, depth: usize, width: usize) -> Result<Self> {
        let arch = MlpArchitecture { input_dim, output_dim, depth, width, activation: Activation::Tanh };
        arch.validate()?;
        Ok(arch)
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::config("network input/output dims must be positive"));
        }
        if self.depth < 1 || self.width < 1 {
            return Err(Error::config("network depth and width must be at least 1"));
        }
        Ok(())
    }

    /// (fan_in, fan_out) of each affine layer, input to output.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.depth + 1);
        dims.push((self.input_dim, self.width));
        for _ in 1..self.depth {
            dims.push((self.width, self.width));
        }
        dims.push((self.width, self.output_dim));
        dims
    }

    /// Weights-and-biases count, excluding extras.
    pub fn weight_count(&self) -> usize {
        self.layer_dims().iter().map(|&(fi, fo)| fo * (fi + 1)).sum()
    }
}

/// Flat trainable state: per-layer weight matrices (row-major, fan_out × fan_in)
/// followed by biases, layer after layer, then named extra scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    arch: MlpArchitecture,
    extras: Vec<String>,
    data: Vec<f64>,
}

impl ParameterVector {
    pub fn zeros(arch: MlpArchitecture, extras: &[(String, f64)]) -> Self {
        let n = arch.weight_count() + extras.len();
        let mut data = vec![0.0; n];
        let base = arch.weight_count();
        for (i, (_, v)) in extras.iter().enumerate() {
            data[base + i] = *v;
        }
        ParameterVector { arch, extras: extras.iter().map(|(n, _)| n.clone()).collect(), data }
    }

    pub fn arch(&self) -> &MlpArchitecture {
        &self.arch
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn set_from(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.data.len());
        self.data.copy_from_slice(flat);
    }

    pub fn extras_names(&self) -> &[String] {
        &self.extras
    }

    pub fn extras_offset(&self) -> usize {
        self.arch.weight_count()
    }

    pub fn extra(&self, name: &str) -> Option<f64> {
        let i = self.extras.iter().position(|n| n == name)?;
        Some(self.data[self.extras_offset() + i])
    }

    /// Offset of layer `l`'s weight block; biases follow the weights.
    pub(crate) fn layer_offset(&self, l: usize) -> usize {
        self.arch.layer_dims()[..l].iter().map(|&(fi, fo)| fo * (fi + 1)).sum()
    }

    pub(crate) fn layer_weights(&self, l: usize) -> &[f64] {
        let (fi, fo) = self.arch.layer_dims()[l];
        let off = self.layer_offset(l);
        &self.data[off..off + fo * fi]
    }

    pub(crate) fn layer_biases(&self, l: usize) -> &[f64] {
        let (fi, fo) = self.arch.layer_dims()[l];
        let off = self.layer_offset(l) + fo * fi;
        &self.data[off..off + fo]
    }
}

/// Glorot-uniform initialization: weights from U(−a, a) with
/// a = sqrt(6 / (fan_in + fan_out)), biases zero, extras at their configured
/// initial values. Fully determined by `seed`.
pub fn init_xavier(
    arch: &MlpArchitecture,
    extras: &[(String, f64)],
    seed: u64,
) -> Result<ParameterVector> {
    arch.validate()?;
    let mut rng = crate::rng::stream(seed, crate::rng::Stream::Init);
    let mut params = ParameterVector::zeros(arch.clone(), extras);
    for (l, (fi, fo)) in arch.layer_dims().iter().copied().enumerate() {
        let a = (6.0 / (fi + fo) as f64).sqrt();
        let off = params.layer_offset(l);
        for w in &mut params.data[off..off + fo * fi] {
            *w = rng.gen_range(-a..a);
        }
    }
    Ok(params)
}

/// Plain forward pass; the map that `autodiff` differentiates.
pub fn forward(params: &ParameterVector, x: &[f64]) -> Result<Vec<f64>> {
    let arch = params.arch();
    if x.len() != arch.input_dim {
        return Err(Error::config(format!(
            "input has dimension {}, network expects {}",
            x.len(),
            arch.input_dim
        )));
    }
    let dims = arch.layer_dims();
    let mut act = x.to_vec();
    let mut next = Vec::new();
    for (l, &(fi, fo)) in dims.iter().enumerate() {
        let w = params.layer_weights(l);
        let b = params.layer_biases(l);
        next.clear();
        next.resize(fo, 0.0);
        for o in 0..fo {
            let row = &w[o * fi..(o + 1) * fi];
            let mut z = b[o];
            for (wi, ai) in row.iter().zip(&act) {
                z += wi * ai;
            }
            next[o] = if l + 1 == dims.len() { z } else { arch.activation.value(z) };
        }
        std::mem::swap(&mut act, &mut next);
    }
    Ok(act)
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    arch: MlpArchitecture,
    extras: Vec<String>,
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"PINNCKP1";

/// Write a parameter checkpoint.
///
/// Layout: 8-byte magic `PINNCKP1`, u32 LE header length, JSON header
/// (architecture and extras names), then the flat parameter array as f64 LE.
pub fn save_checkpoint(path: &Path, params: &ParameterVector) -> Result<()> {
    let header = serde_json::to_vec(&CheckpointHeader {
        arch: params.arch.clone(),
        extras: params.extras.clone(),
    })
    .map_err(|e| Error::Format { what: "checkpoint header".into(), detail: e.to_string() })?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(CHECKPOINT_MAGIC)?;
    f.write_all(&(header.len() as u32).to_le_bytes())?;
    f.write_all(&header)?;
    for v in &params.data {
        f.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Read a checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint(path: &Path) -> Result<ParameterVector> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    f.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Format { what: path.display().to_string(), detail: "bad magic".into() });
    }
    let mut len4 = [0u8; 4];
    f.read_exact(&mut len4)?;
    let hlen = u32::from_le_bytes(len4) as usize;
    let mut hbuf = vec![0u8; hlen];
    f.read_exact(&mut hbuf)?;
    let header: CheckpointHeader = serde_json::from_slice(&hbuf)
        .map_err(|e| Error::Format { what: path.display().to_string(), detail: e.to_string() })?;
    let n = header.arch.weight_count() + header.extras.len();
    let mut data = vec![0.0; n];
    let mut buf = [0u8; 8];
    for v in &mut data {
        f.read_exact(&mut buf)?;
        *v = f64::from_le_bytes(buf);
    }
    Ok(ParameterVector { arch: header.arch, extras: header.extras, data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn arch_4x40() -> MlpArchitecture {
        MlpArchitecture::new(2, 1, 4, 40).unwrap()
    }

    #[test]
    fn parameter_count_matches_algebra() {
        let arch = arch_4x40();
        // 40·(2+1) + 3·40·(40+1) + 1·(40+1)
        assert_eq!(arch.weight_count(), 40 * 3 + 3 * 40 * 41 + 41);
        let euler = MlpArchitecture::new(2, 3, 6, 20).unwrap();
        assert_eq!(euler.weight_count(), 20 * 3 + 5 * 20 * 21 + 3 * 21);
    }

    #[test]
    fn init_is_deterministic() {
        let arch = arch_4x40();
        let a = init_xavier(&arch, &[], 42).unwrap();
        let b = init_xavier(&arch, &[], 42).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
        let c = init_xavier(&arch, &[], 43).unwrap();
        assert_ne!(a.as_slice(), c.as_slice());
    }

    #[test]
    fn glorot_bound_for_40x40_layer() {
        let arch = MlpArchitecture::new(40, 40, 1, 40).unwrap();
        let p = init_xavier(&arch, &[], 7).unwrap();
        let bound = (6.0_f64 / 80.0).sqrt();
        for l in 0..2 {
            for &w in p.layer_weights(l) {
                assert!(w.abs() <= bound, "weight {w} outside ±{bound}");
            }
            assert!(p.layer_biases(l).iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn inverse_extras_initialized() {
        let arch = arch_4x40();
        let p = init_xavier(&arch, &[("nu_hat".to_string(), 2.0)], 1).unwrap();
        assert_eq!(p.extra("nu_hat"), Some(2.0));
        // ν = ν̂ · 0.01/π = 0.02/π at init
        let nu = p.extra("nu_hat").unwrap() * 0.01 / std::f64::consts::PI;
        assert_abs_diff_eq!(nu, 0.02 / std::f64::consts::PI, epsilon = 1e-16);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let arch = arch_4x40();
        let p = ParameterVector::zeros(arch, &[]);
        let y = forward(&p, &[0.3, -0.7]).unwrap();
        assert_eq!(y, vec![0.0]);
    }

    #[test]
    fn hand_set_weights_reproduce_tanh_of_2x() {
        // one hidden neuron: h = tanh(2x); output = 1·h
        let arch = MlpArchitecture::new(1, 1, 1, 1).unwrap();
        let mut p = ParameterVector::zeros(arch, &[]);
        p.as_mut_slice()[0] = 2.0; // W1
        p.as_mut_slice()[1] = 0.0; // b1
        p.as_mut_slice()[2] = 1.0; // W2
        p.as_mut_slice()[3] = 0.0; // b2
        let y = forward(&p, &[0.5]).unwrap();
        assert_abs_diff_eq!(y[0], 1.0_f64.tanh(), epsilon = 1e-15);
        assert_abs_diff_eq!(y[0], 0.76159, epsilon = 1e-5);
    }

    #[test]
    fn identity_map_via_identity_activation() {
        let arch = MlpArchitecture::new(2, 2, 1, 2).unwrap().with_activation(Activation::Identity);
        let mut p = ParameterVector::zeros(arch, &[]);
        // hidden W = I, output W = I
        p.as_mut_slice()[0] = 1.0;
        p.as_mut_slice()[3] = 1.0;
        p.as_mut_slice()[6] = 1.0;
        p.as_mut_slice()[9] = 1.0;
        let y = forward(&p, &[0.3, -0.2]).unwrap();
        assert_abs_diff_eq!(y[0], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(y[1], -0.2, epsilon = 1e-15);
    }

    #[test]
    fn euler_architecture_output_shape() {
        let arch = MlpArchitecture::new(2, 3, 6, 20).unwrap();
        let p = init_xavier(&arch, &[], 3).unwrap();
        let y = forward(&p, &[0.5, 1.0]).unwrap();
        assert_eq!(y.len(), 3);
    }

    #[test]
    fn forward_is_reproducible_bit_for_bit() {
        let p = init_xavier(&arch_4x40(), &[], 11).unwrap();
        let a = forward(&p, &[0.1, 0.9]).unwrap();
        let b = forward(&p, &[0.1, 0.9]).unwrap();
        assert_eq!(a[0].to_bits(), b[0].to_bits());
    }

    #[test]
    fn output_continuous_in_inputs_and_params() {
        let p = init_xavier(&arch_4x40(), &[], 5).unwrap();
        let y0 = forward(&p, &[0.2, 0.4]).unwrap()[0];
        let y1 = forward(&p, &[0.2 + 1e-9, 0.4]).unwrap()[0];
        assert!((y1 - y0).abs() < 1e-6);
        let mut q = p.clone();
        q.as_mut_slice()[0] += 1e-9;
        let y2 = forward(&q, &[0.2, 0.4]).unwrap()[0];
        assert!((y2 - y0).abs() < 1e-6);
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let p = init_xavier(&arch_4x40(), &[], 5).unwrap();
        assert!(matches!(forward(&p, &[0.1]), Err(Error::Config(_))));
    }

    #[test]
    fn checkpoint_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("params.ckpt");
        let p = init_xavier(&arch_4x40(), &[("nu_hat".into(), 2.0)], 9).unwrap();
        save_checkpoint(&path, &p).unwrap();
        let q = load_checkpoint(&path).unwrap();
        assert_eq!(p, q);
    }
}
