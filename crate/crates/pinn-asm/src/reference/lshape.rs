//! Finite-difference reference for the L-shape Poisson problem.
//!
//! −Δu = 1 with u = 0 on ∂Ω, Ω = [−1,1]² \ [0,1]², discretized with the
//! 5-point Laplacian on a uniform node grid and solved by conjugate
//! gradients to a 1e-10 relative residual. Accuracy is limited by the
//! reentrant-corner singularity (the field error is ~1e-3), far below the
//! model errors this reference is used to measure.

use crate::error::{Error, Result};
use crate::reference::cached_or_compute;

/// Node-centered reference field on the (res+1)² grid over [−1,1]².
///
/// `values` is row-major by y then x; nodes outside the domain closure hold 0.
#[derive(Debug, Clone)]
pub struct LshapeField {
    pub resolution: usize,
    pub values: Vec<f64>,
}

impl LshapeField {
    pub fn nodes_per_axis(&self) -> usize {
        self.resolution + 1
    }

    pub fn coord(&self, i: usize) -> f64 {
        -1.0 + 2.0 * i as f64 / self.resolution as f64
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nodes_per_axis() + ix]
    }

    /// Node lies in the closure of Ω.
    pub fn in_domain(&self, ix: usize, iy: usize) -> bool {
        let (x, y) = (self.coord(ix), self.coord(iy));
        !(x > 1e-14 && y > 1e-14)
    }

    pub fn interior_max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
}

fn unknown_mask(res: usize) -> Vec<Option<usize>> {
    let n = res + 1;
    let mut mask = vec![None; n * n];
    let mut count = 0;
    for iy in 1..res {
        for ix in 1..res {
            let x = -1.0 + 2.0 * ix as f64 / res as f64;
            let y = -1.0 + 2.0 * iy as f64 / res as f64;
            // interior of Ω: strictly inside the outer box and strictly
            // outside the closed cut [0,1]²
            if x < -1e-14 || y < -1e-14 {
                mask[iy * n + ix] = Some(count);
                count += 1;
            }
        }
    }
    mask
}

/// Solve the masked 5-point system by CG. Returns the full node field.
fn solve(res: usize) -> Result<Vec<f64>> {
    let n = res + 1;
    let h = 2.0 / res as f64;
    let mask = unknown_mask(res);
    let m = mask.iter().filter(|v| v.is_some()).count();
    // neighbor index table, usize::MAX for boundary/outside (value 0)
    let mut nbrs = vec![[usize::MAX; 4]; m];
    for iy in 0..n {
        for ix in 0..n {
            if let Some(k) = mask[iy * n + ix] {
                let around = [
                    (ix.wrapping_sub(1), iy),
                    (ix + 1, iy),
                    (ix, iy.wrapping_sub(1)),
                    (ix, iy + 1),
                ];
                for (s, &(jx, jy)) in around.iter().enumerate() {
                    if jx < n && jy < n {
                        if let Some(j) = mask[jy * n + jx] {
                            nbrs[k][s] = j;
                        }
                    }
                }
            }
        }
    }
    let apply = |u: &[f64], out: &mut [f64]| {
        let inv_h2 = 1.0 / (h * h);
        for k in 0..m {
            let mut acc = 4.0 * u[k];
            for &j in &nbrs[k] {
                if j != usize::MAX {
                    acc -= u[j];
                }
            }
            out[k] = acc * inv_h2;
        }
    };
    // CG on A u = 1
    let b = vec![1.0; m];
    let mut u = vec![0.0; m];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0; m];
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let b_norm = dot(&b, &b).sqrt();
    let mut rs = dot(&r, &r);
    let tol = 1e-10 * b_norm;
    let max_iters = 40 * res;
    let mut converged = false;
    for _ in 0..max_iters {
        if rs.sqrt() <= tol {
            converged = true;
            break;
        }
        apply(&p, &mut ap);
        let alpha = rs / dot(&p, &ap);
        for k in 0..m {
            u[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rs_new = dot(&r, &r);
        let beta = rs_new / rs;
        rs = rs_new;
        for k in 0..m {
            p[k] = r[k] + beta * p[k];
        }
    }
    if !converged && rs.sqrt() > tol {
        return Err(Error::SolverStall { residual: rs.sqrt() / b_norm });
    }
    let mut full = vec![0.0; n * n];
    for (node, k) in mask.iter().enumerate() {
        if let Some(k) = k {
            full[node] = u[*k];
        }
    }
    Ok(full)
}

/// Reference field at `resolution` cells per axis (so resolution+1 nodes).
/// Solves are cached on disk keyed by resolution.
pub fn lshape_reference(resolution: usize) -> Result<LshapeField> {
    if resolution < 64 {
        return Err(Error::config("lshape reference resolution must be at least 64"));
    }
    let key = format!("lshape/fd5/cg1e-10/res={resolution}");
    let values = cached_or_compute(&key, || solve(resolution))?;
    Ok(LshapeField { resolution, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_nodes_are_exactly_zero() {
        let f = lshape_reference(64).unwrap();
        let n = f.nodes_per_axis();
        for i in 0..n {
            assert_eq!(f.value(i, 0), 0.0);
            assert_eq!(f.value(i, n - 1), 0.0);
            assert_eq!(f.value(0, i), 0.0);
            assert_eq!(f.value(n - 1, i), 0.0);
        }
        // reentrant edges
        let mid = f.resolution / 2; // x = 0 line
        for iy in mid..n {
            assert_eq!(f.value(mid, iy), 0.0);
        }
        for ix in mid..n {
            assert_eq!(f.value(ix, mid), 0.0);
        }
    }

    #[test]
    fn field_is_symmetric_under_xy_swap() {
        let f = lshape_reference(128).unwrap();
        let n = f.nodes_per_axis();
        for iy in 0..n {
            for ix in 0..n {
                let a = f.value(ix, iy);
                let b = f.value(iy, ix);
                assert!((a - b).abs() < 1e-9, "asymmetry at ({ix},{iy}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn interior_max_is_richardson_stable() {
        let coarse = lshape_reference(256).unwrap().interior_max();
        let fine = lshape_reference(512).unwrap().interior_max();
        let rel = (coarse - fine).abs() / fine;
        assert!(rel < 0.01, "interior max drifts {rel:.4} between 256² and 512²");
    }

    #[test]
    fn positive_inside() {
        let f = lshape_reference(64).unwrap();
        let n = f.nodes_per_axis();
        // −Δu = 1 with zero boundary ⇒ u > 0 in the interior (maximum principle)
        for iy in 1..n - 1 {
            for ix in 1..n - 1 {
                if f.in_domain(ix, iy) {
                    let x = f.coord(ix);
                    let y = f.coord(iy);
                    if x < -1e-9 || y < -1e-9 {
                        assert!(f.value(ix, iy) > 0.0, "u ≤ 0 at ({x},{y})");
                    }
                }
            }
        }
    }
}
