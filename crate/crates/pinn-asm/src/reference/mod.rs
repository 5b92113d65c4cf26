//! Independent reference oracles.
//!
//! Everything here produces ground truth for error metrics and inverse data
//! without touching the network or autodiff code: the Burgers solution comes
//! from the Cole–Hopf quadrature formula, the Euler contact solution is
//! analytic, the L-shape Poisson field is a finite-difference solve, and the
//! high-dimensional solution is a closed form.

mod burgers;
mod euler;
mod highd;
mod lshape;

pub use burgers::burgers_reference;
pub use euler::euler_exact;
pub use highd::highd_exact;
pub use lshape::{lshape_reference, LshapeField};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::PathBuf;

/// How a reference field was produced, with enough metadata to regenerate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    Analytic,
    Quadrature { order: usize },
    FiniteDifference { resolution: usize, tolerance: f64 },
}

/// Evaluation points and reference values.
#[derive(Debug, Clone)]
pub struct ReferenceField {
    /// Row-major points, `dim` coordinates each.
    pub points: Vec<f64>,
    pub dim: usize,
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl ReferenceField {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

const CACHE_MAGIC: &[u8; 8] = b"PINNREF1";

/// Directory for cached reference solves. Override with `PINN_ASM_CACHE`.
pub fn cache_dir() -> PathBuf {
    std::env::var_os("PINN_ASM_CACHE")
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("pinn-asm-ref-cache"))
}

/// Load a cached f64 array, or compute and store it.
///
/// File layout: 8-byte magic `PINNREF1`, u32 LE key length, the UTF-8 key,
/// u64 LE value count, then the values as f64 LE.
pub fn cached_or_compute(key: &str, compute: impl FnOnce() -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    let dir = cache_dir();
    let fname = {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(key.as_bytes());
        format!("{:x}.ref", h.finalize())
    };
    let path = dir.join(fname);
    if let Ok(mut f) = std::fs::File::open(&path) {
        let mut magic = [0u8; 8];
        let mut ok = f.read_exact(&mut magic).is_ok() && &magic == CACHE_MAGIC;
        if ok {
            let mut len4 = [0u8; 4];
            f.read_exact(&mut len4)?;
            let klen = u32::from_le_bytes(len4) as usize;
            let mut kbuf = vec![0u8; klen];
            f.read_exact(&mut kbuf)?;
            ok = kbuf == key.as_bytes();
            if ok {
                let mut len8 = [0u8; 8];
                f.read_exact(&mut len8)?;
                let n = u64::from_le_bytes(len8) as usize;
                let mut values = vec![0.0; n];
                let mut buf = [0u8; 8];
                for v in &mut values {
                    f.read_exact(&mut buf)?;
                    *v = f64::from_le_bytes(buf);
                }
                return Ok(values);
            }
        }
        // fall through to recompute on any mismatch
        let _ = ok;
    }
    let values = compute()?;
    std::fs::create_dir_all(&dir)?;
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
        f.write_all(CACHE_MAGIC)?;
        f.write_all(&(key.len() as u32).to_le_bytes())?;
        f.write_all(key.as_bytes())?;
        f.write_all(&(values.len() as u64).to_le_bytes())?;
        for v in &values {
            f.write_all(&v.to_le_bytes())?;
        }
    }
    std::fs::rename(&tmp, &path).map_err(Error::Io)?;
    Ok(values)
}
