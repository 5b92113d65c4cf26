//! Computational domains, uniform subdomain decompositions, random sampling,
//! and tensor-product Gauss–Legendre quadrature.
//!
//! Domains are axis-aligned boxes, optionally with an axis-aligned box removed
//! (the L-shape). Each axis is labelled and marked spatial or temporal; the
//! distinction drives boundary sampling (spatial faces vs. the initial-time
//! face) and nothing else.

use crate::error::{Error, Result};
use rand::Rng;

/// One coordinate axis of a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub temporal: bool,
}

impl Axis {
    pub fn spatial(name: &str, lo: f64, hi: f64) -> Self {
        Axis { name: name.into(), lo, hi, temporal: false }
    }

    pub fn temporal(name: &str, lo: f64, hi: f64) -> Self {
        Axis { name: name.into(), lo, hi, temporal: true }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }
}

/// An axis-aligned box, possibly with a box removed (`cut`).
///
/// The removed box must be contained in the closure of the outer box. Cut
/// domains are only supported in two dimensions, which covers the L-shape
/// Ω = [−1,1]² \ [0,1]².
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    axes: Vec<Axis>,
    cut: Option<(Vec<f64>, Vec<f64>)>,
}

/// Which part of the boundary to sample.
#[derive(Debug, Clone, PartialEq)]
pub enum FaceSelector {
    /// All faces of spatial axes (for time-dependent problems this excludes
    /// both time faces).
    SpatialBoundary,
    /// The `t = t_lo` face of the (unique) temporal axis.
    InitialTime,
    /// Every face, spatial and temporal alike.
    AllFaces,
    /// Specific faces as `(axis index, upper side?)`.
    Faces(Vec<(usize, bool)>),
}

/// A flat piece of the boundary: `axis` is pinned at `at`, the remaining
/// axes range over `ranges` (indexed by original axis, the pinned entry is
/// ignored).
#[derive(Debug, Clone)]
pub struct Face {
    pub axis: usize,
    pub at: f64,
    pub ranges: Vec<(f64, f64)>,
}

impl Face {
    pub fn measure(&self, pinned: usize) -> f64 {
        self.ranges
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != pinned)
            .map(|(_, (lo, hi))| hi - lo)
            .product()
    }
}

impl Domain {
    pub fn new_box(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::config("domain needs at least one axis"));
        }
        for a in &axes {
            if !(a.hi > a.lo) {
                return Err(Error::config(format!(
                    "axis {} has empty interior [{}, {}]",
                    a.name, a.lo, a.hi
                )));
            }
        }
        Ok(Domain { axes, cut: None })
    }

    /// Box with a corner box removed. 2-D only.
    pub fn new_box_minus_box(axes: Vec<Axis>, cut_lo: Vec<f64>, cut_hi: Vec<f64>) -> Result<Self> {
        let d = Domain::new_box(axes)?;
        if d.dim() != 2 {
            return Err(Error::config("box-minus-box domains are 2-D only"));
        }
        if cut_lo.len() != 2 || cut_hi.len() != 2 {
            return Err(Error::config("cut box dimension mismatch"));
        }
        for j in 0..2 {
            if cut_lo[j] < d.axes[j].lo - 1e-12 || cut_hi[j] > d.axes[j].hi + 1e-12 {
                return Err(Error::config("cut box must lie within the outer box"));
            }
            if !(cut_hi[j] > cut_lo[j]) {
                return Err(Error::config("cut box has empty interior"));
            }
        }
        Ok(Domain { axes: d.axes, cut: Some((cut_lo, cut_hi)) })
    }

    /// The L-shaped domain [−1,1]² \ [0,1]² with axes `x`, `y`.
    pub fn l_shape() -> Self {
        Domain::new_box_minus_box(
            vec![Axis::spatial("x", -1.0, 1.0), Axis::spatial("y", -1.0, 1.0)],
            vec![0.0, 0.0],
            vec![1.0, 1.0],
        )
        .expect("static L-shape is valid")
    }

    /// The Burgers space–time box [−1,1] × [0,1] with axes `x`, `t`.
    pub fn burgers() -> Self {
        Domain::new_box(vec![Axis::spatial("x", -1.0, 1.0), Axis::temporal("t", 0.0, 1.0)])
            .expect("static box is valid")
    }

    /// The Euler space–time box [0,1] × [0,2] with axes `x`, `t`.
    pub fn euler() -> Self {
        Domain::new_box(vec![Axis::spatial("x", 0.0, 1.0), Axis::temporal("t", 0.0, 2.0)])
            .expect("static box is valid")
    }

    /// The hypercube [−1,1]^d with axes `x1..xd`.
    pub fn hypercube(d: usize) -> Self {
        let axes = (1..=d).map(|i| Axis::spatial(&format!("x{i}"), -1.0, 1.0)).collect();
        Domain::new_box(axes).expect("static box is valid")
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis_names(&self) -> Vec<String> {
        self.axes.iter().map(|a| a.name.clone()).collect()
    }

    pub fn cut(&self) -> Option<(&[f64], &[f64])> {
        self.cut.as_ref().map(|(lo, hi)| (lo.as_slice(), hi.as_slice()))
    }

    /// Lebesgue measure of the domain.
    pub fn measure(&self) -> f64 {
        let outer: f64 = self.axes.iter().map(Axis::len).product();
        match &self.cut {
            None => outer,
            Some((lo, hi)) => {
                let cut: f64 = lo.iter().zip(hi).map(|(l, h)| h - l).product();
                outer - cut
            }
        }
    }

    fn in_outer_box(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.axes).all(|(&v, a)| v >= a.lo - 1e-12 && v <= a.hi + 1e-12)
    }

    fn strictly_in_cut(&self, x: &[f64]) -> bool {
        match &self.cut {
            None => false,
            Some((lo, hi)) => x.iter().zip(lo.iter().zip(hi)).all(|(&v, (&l, &h))| v > l && v < h),
        }
    }

    /// Point lies in the closure of the domain.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.in_outer_box(x) && !self.strictly_in_cut(x)
    }

    /// Uniform i.i.d. interior points; rejection sampling against the cut.
    pub fn sample_interior(&self, n: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
        let mut pts = Vec::with_capacity(n);
        while pts.len() < n {
            let p: Vec<f64> =
                self.axes.iter().map(|a| rng.gen_range(a.lo..a.hi)).collect();
            if !self.strictly_in_cut(&p) {
                pts.push(p);
            }
        }
        pts
    }

    /// Boundary faces of the domain.
    ///
    /// For a plain box this is the 2·D axis faces. For the L-shape the outer
    /// faces are trimmed where they fall inside the cut and the two reentrant
    /// faces of the cut are added.
    pub fn faces(&self) -> Vec<Face> {
        let d = self.dim();
        let full: Vec<(f64, f64)> = self.axes.iter().map(|a| (a.lo, a.hi)).collect();
        let mut faces = Vec::new();
        match &self.cut {
            None => {
                for (j, a) in self.axes.iter().enumerate() {
                    for at in [a.lo, a.hi] {
                        faces.push(Face { axis: j, at, ranges: full.clone() });
                    }
                }
            }
            Some((clo, chi)) => {
                debug_assert_eq!(d, 2);
                for j in 0..2 {
                    let o = 1 - j;
                    let a = &self.axes[j];
                    // lower outer face is never clipped when the cut sits at the
                    // upper corner; handle the general contained-cut case anyway.
                    for at in [a.lo, a.hi] {
                        let on_cut_side = (at - clo[j]).abs() < 1e-12 && false;
                        let _ = on_cut_side;
                        let mut ranges = full.clone();
                        // If this outer face passes through the cut, remove the
                        // overlap with the cut's projection on the other axis.
                        let face_in_cut = at >= clo[j] - 1e-12 && at <= chi[j] + 1e-12;
                        if face_in_cut {
                            let (olo, ohi) = ranges[o];
                            let (cl, ch) = (clo[o], chi[o]);
                            // Keep the part outside [cl, ch]; the cut corner
                            // geometry leaves a single interval.
                            if cl <= olo + 1e-12 && ch >= ohi - 1e-12 {
                                continue; // face entirely removed
                            } else if cl <= olo + 1e-12 {
                                ranges[o] = (ch.min(ohi), ohi);
                            } else if ch >= ohi - 1e-12 {
                                ranges[o] = (olo, cl.max(olo));
                            }
                            // cut strictly interior to the face cannot happen
                            // for a corner cut; leave untrimmed otherwise.
                        }
                        if ranges[o].1 - ranges[o].0 > 1e-12 {
                            faces.push(Face { axis: j, at, ranges });
                        }
                    }
                    // Reentrant face: the cut side facing the domain interior.
                    // For a corner cut at the upper corner that is the lower
                    // cut plane, spanning the cut's range on the other axis.
                    let mut ranges = full.clone();
                    ranges[o] = (clo[o].max(full[o].0), chi[o].min(full[o].1));
                    let interior_side = clo[j];
                    if interior_side > self.axes[j].lo + 1e-12
                        && interior_side < self.axes[j].hi - 1e-12
                    {
                        faces.push(Face { axis: j, at: interior_side, ranges });
                    }
                }
            }
        }
        faces
    }

    fn selected_faces(&self, sel: &FaceSelector) -> Result<Vec<Face>> {
        let all = self.faces();
        let picked: Vec<Face> = match sel {
            FaceSelector::AllFaces => all,
            FaceSelector::SpatialBoundary => all
                .into_iter()
                .filter(|f| !self.axes[f.axis].temporal)
                .collect(),
            FaceSelector::InitialTime => all
                .into_iter()
                .filter(|f| {
                    let a = &self.axes[f.axis];
                    a.temporal && (f.at - a.lo).abs() < 1e-12
                })
                .collect(),
            FaceSelector::Faces(list) => {
                let mut out = Vec::new();
                for &(axis, upper) in list {
                    if axis >= self.dim() {
                        return Err(Error::config(format!("face axis {axis} out of range")));
                    }
                    let a = &self.axes[axis];
                    let at = if upper { a.hi } else { a.lo };
                    out.extend(
                        self.faces()
                            .into_iter()
                            .filter(|f| f.axis == axis && (f.at - at).abs() < 1e-12),
                    );
                }
                out
            }
        };
        if picked.is_empty() {
            return Err(Error::config("face selection is empty for this domain"));
        }
        Ok(picked)
    }

    /// Uniform boundary points over the selected faces, proportional to face
    /// measure.
    pub fn sample_boundary(
        &self,
        n: usize,
        rng: &mut impl Rng,
        sel: &FaceSelector,
    ) -> Result<Vec<Vec<f64>>> {
        let faces = self.selected_faces(sel)?;
        let measures: Vec<f64> = faces.iter().map(|f| f.measure(f.axis)).collect();
        let total: f64 = measures.iter().sum();
        let mut pts = Vec::with_capacity(n);
        for _ in 0..n {
            let mut u = rng.gen_range(0.0..total);
            let mut k = 0;
            while k + 1 < faces.len() && u >= measures[k] {
                u -= measures[k];
                k += 1;
            }
            let f = &faces[k];
            let p: Vec<f64> = (0..self.dim())
                .map(|j| {
                    if j == f.axis {
                        f.at
                    } else {
                        let (lo, hi) = f.ranges[j];
                        rng.gen_range(lo..hi)
                    }
                })
                .collect();
            pts.push(p);
        }
        Ok(pts)
    }

    /// Exact boundary predicate (distance 0 to ∂Ω, up to 1e-12).
    pub fn on_boundary(&self, x: &[f64]) -> bool {
        if !self.contains(x) {
            return false;
        }
        let on_outer = x
            .iter()
            .zip(&self.axes)
            .any(|(&v, a)| (v - a.lo).abs() < 1e-12 || (v - a.hi).abs() < 1e-12);
        let on_cut = match &self.cut {
            None => false,
            Some((lo, hi)) => {
                let inside_closed = x
                    .iter()
                    .zip(lo.iter().zip(hi.iter()))
                    .all(|(&v, (&l, &h))| v >= l - 1e-12 && v <= h + 1e-12);
                let on_cut_face = x
                    .iter()
                    .zip(lo.iter().zip(hi.iter()))
                    .any(|(&v, (&l, &h))| (v - l).abs() < 1e-12 || (v - h).abs() < 1e-12);
                inside_closed && on_cut_face
            }
        };
        on_outer || on_cut
    }
}

/// One cell of a [`SubdomainGrid`].
#[derive(Debug, Clone)]
pub struct Cell {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Multi-index in the uniform grid, for logging.
    pub index: Vec<usize>,
}

impl Cell {
    pub fn measure(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&v, (&l, &h))| v >= l - 1e-12 && v <= h + 1e-12)
    }

    /// Uniform point inside the cell.
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&l, &h)| rng.gen_range(l..h))
            .collect()
    }
}

/// Uniform decomposition of a domain into equal-measure cells.
///
/// For cut domains, cells fully contained in the removed box are dropped;
/// cells straddling the reentrant boundary are retained so the remaining
/// cells still cover the domain.
#[derive(Debug, Clone)]
pub struct SubdomainGrid {
    pub counts: Vec<usize>,
    cells: Vec<Cell>,
}

impl SubdomainGrid {
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Divide `domain` into a uniform grid with `counts[j]` cells per axis.
pub fn make_subdomains(domain: &Domain, counts: &[usize]) -> Result<SubdomainGrid> {
    if counts.len() != domain.dim() {
        return Err(Error::config(format!(
            "subdomain counts have {} axes, domain has {}",
            counts.len(),
            domain.dim()
        )));
    }
    if counts.iter().any(|&c| c == 0) {
        return Err(Error::config("subdomain counts must be positive"));
    }
    let d = domain.dim();
    let widths: Vec<f64> =
        domain.axes().iter().zip(counts).map(|(a, &c)| a.len() / c as f64).collect();
    let mut cells = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        let lo: Vec<f64> = (0..d)
            .map(|j| domain.axes()[j].lo + idx[j] as f64 * widths[j])
            .collect();
        let hi: Vec<f64> = (0..d).map(|j| lo[j] + widths[j]).collect();
        let fully_in_cut = match domain.cut() {
            None => false,
            Some((clo, chi)) => (0..d)
                .all(|j| lo[j] >= clo[j] - 1e-12 && hi[j] <= chi[j] + 1e-12),
        };
        if !fully_in_cut {
            cells.push(Cell { lo, hi, index: idx.clone() });
        }
        // advance multi-index
        let mut j = 0;
        loop {
            idx[j] += 1;
            if idx[j] < counts[j] {
                break;
            }
            idx[j] = 0;
            j += 1;
            if j == d {
                return Ok(SubdomainGrid { counts: counts.to_vec(), cells });
            }
        }
    }
}

/// Nodes and weights of an n-point Gauss–Legendre rule on [−1, 1].
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// ∫ f on [lo, hi] by the mapped rule.
    pub fn integrate(&self, lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(c + h * x);
        }
        acc * h
    }
}

/// Legendre P_n and P_n' at x via the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    // P_n'(x) = n (x P_n − P_{n−1}) / (x² − 1)
    let dp = if (x * x - 1.0).abs() < 1e-300 {
        0.0
    } else {
        n as f64 * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, dp)
}

/// n-point Gauss–Legendre nodes and weights on [−1, 1].
///
/// Newton iteration on P_n from Chebyshev-like initial guesses; the lower
/// half is computed and mirrored so nodes are exactly symmetric about 0.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::config("quadrature order must be at least 1"));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n / 2;
    for i in 0..m {
        // i-th root counted from x = +1 downwards
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        let (_, dp) = legendre_with_derivative(n, 0.0);
        nodes[m] = 0.0;
        weights[m] = 2.0 / (dp * dp);
    }
    Ok(QuadratureRule { nodes, weights })
}

/// Measure-normalized tensor-product quadrature mean of |f| over a cell.
pub fn subdomain_mean(
    f: &mut dyn FnMut(&[f64]) -> f64,
    cell: &Cell,
    rule: &QuadratureRule,
) -> f64 {
    let d = cell.lo.len();
    let n = rule.n();
    let centers: Vec<f64> = cell.center();
    let halves: Vec<f64> = (0..d).map(|j| 0.5 * (cell.hi[j] - cell.lo[j])).collect();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut acc = 0.0;
    loop {
        let mut w = 1.0;
        for j in 0..d {
            x[j] = centers[j] + halves[j] * rule.nodes()[idx[j]];
            w *= 0.5 * rule.weights()[idx[j]];
        }
        acc += w * f(&x).abs();
        let mut j = 0;
        loop {
            idx[j] += 1;
            if idx[j] < n {
                break;
            }
            idx[j] = 0;
            j += 1;
            if j == d {
                return acc;
            }
        }
    }
}

/// Visit every tensor-product quadrature node of a cell with its normalized
/// weight (weights sum to 1 over the cell).
pub fn for_each_quadrature_node(
    cell: &Cell,
    rule: &QuadratureRule,
    mut visit: impl FnMut(&[f64], f64),
) {
    let d = cell.lo.len();
    let n = rule.n();
    let centers = cell.center();
    let halves: Vec<f64> = (0..d).map(|j| 0.5 * (cell.hi[j] - cell.lo[j])).collect();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    loop {
        let mut w = 1.0;
        for j in 0..d {
            x[j] = centers[j] + halves[j] * rule.nodes()[idx[j]];
            w *= 0.5 * rule.weights()[idx[j]];
        }
        visit(&x, w);
        let mut j = 0;
        loop {
            idx[j] += 1;
            if idx[j] < n {
                break;
            }
            idx[j] = 0;
            j += 1;
            if j == d {
                return;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use approx::assert_abs_diff_eq;

    #[test]
    fn one_point_rule_is_midpoint() {
        let r = gauss_legendre(1).unwrap();
        assert_eq!(r.nodes(), &[0.0]);
        assert_eq!(r.weights(), &[2.0]);
    }

    #[test]
    fn two_point_nodes_match_root_finder_oracle() {
        // Roots of P2(x) = (3x² − 1)/2, bracketed by bisection, independent of
        // the Newton-based production path.
        let p2 = |x: f64| 0.5 * (3.0 * x * x - 1.0);
        let mut lo = 0.1;
        let mut hi = 1.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if p2(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        let r = gauss_legendre(2).unwrap();
        assert_abs_diff_eq!(r.nodes()[1], root, epsilon = 1e-14);
        assert_abs_diff_eq!(r.nodes()[0], -root, epsilon = 1e-14);
        assert_abs_diff_eq!(r.weights()[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.weights()[1], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.nodes()[1], 0.5773502691896258, epsilon = 1e-15);
    }

    #[test]
    fn three_point_rule_integrates_quartic() {
        let r = gauss_legendre(3).unwrap();
        let integral = r.integrate(-1.0, 1.0, |x| x.powi(4));
        assert_abs_diff_eq!(integral, 2.0 / 5.0, epsilon = 1e-14);
    }

    #[test]
    fn exactness_on_monomials_up_to_2n_minus_1() {
        for n in 1..=12 {
            let r = gauss_legendre(n).unwrap();
            for deg in 0..=(2 * n - 1) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let got = r.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
                assert_abs_diff_eq!(got, exact, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn weights_positive_sum_two_nodes_symmetric() {
        for n in 1..=30 {
            let r = gauss_legendre(n).unwrap();
            assert!(r.weights().iter().all(|&w| w > 0.0));
            let s: f64 = r.weights().iter().sum();
            assert_abs_diff_eq!(s, 2.0, epsilon = 1e-13);
            for i in 0..n {
                assert_eq!(r.nodes()[i], -r.nodes()[n - 1 - i]);
            }
        }
    }

    #[test]
    fn zero_order_is_config_error() {
        assert!(matches!(gauss_legendre(0), Err(Error::Config(_))));
    }

    #[test]
    fn burgers_grid_has_800_cells() {
        let grid = make_subdomains(&Domain::burgers(), &[40, 20]).unwrap();
        assert_eq!(grid.len(), 800);
    }

    #[test]
    fn lshape_grid_retains_cells_covering_the_domain() {
        // Counting oracle: enumerate the 25×25 cells directly and count those
        // fully inside [0,1]²; cell edges sit at −1 + 0.08k so the first fully
        // contained cell starts at 0.04.
        let mut removed = 0;
        for i in 0..25 {
            for j in 0..25 {
                let lo = (-1.0 + 0.08 * i as f64, -1.0 + 0.08 * j as f64);
                let hi = (lo.0 + 0.08, lo.1 + 0.08);
                if lo.0 >= -1e-12 && lo.1 >= -1e-12 && hi.0 <= 1.0 + 1e-12 && hi.1 <= 1.0 + 1e-12
                {
                    removed += 1;
                }
            }
        }
        let grid = make_subdomains(&Domain::l_shape(), &[25, 25]).unwrap();
        assert_eq!(grid.len(), 625 - removed);
        assert_eq!(grid.len(), 481);
        // every retained cell touches the domain, and every domain point is
        // covered (spot-check by random containment)
        let dom = Domain::l_shape();
        let mut rng = seeded(3);
        for p in dom.sample_interior(2000, &mut rng) {
            assert!(grid.cells().iter().any(|c| c.contains(&p)));
        }
    }

    #[test]
    fn trivial_grid_is_the_domain() {
        let dom = Domain::burgers();
        let grid = make_subdomains(&dom, &[1, 1]).unwrap();
        assert_eq!(grid.len(), 1);
        let c = &grid.cells()[0];
        assert_eq!(c.lo, vec![-1.0, 0.0]);
        assert_eq!(c.hi, vec![1.0, 1.0]);
    }

    #[test]
    fn box_grid_partitions_measure() {
        for counts in [[7usize, 3], [40, 20], [25, 25]] {
            let dom = Domain::burgers();
            let grid = make_subdomains(&dom, &counts).unwrap();
            let total: f64 = grid.cells().iter().map(Cell::measure).sum();
            assert_abs_diff_eq!(total, dom.measure(), epsilon = 1e-12);
        }
    }

    #[test]
    fn interior_sampling_respects_cut() {
        let dom = Domain::l_shape();
        let mut rng = seeded(11);
        let pts = dom.sample_interior(10_000, &mut rng);
        assert_eq!(pts.len(), 10_000);
        assert!(pts.iter().all(|p| !(p[0] > 0.0 && p[1] > 0.0 && p[0] < 1.0 && p[1] < 1.0)));
    }

    #[test]
    fn interior_sampling_is_uniform_by_quadrant() {
        let dom =
            Domain::new_box(vec![Axis::spatial("x", -1.0, 1.0), Axis::spatial("y", -1.0, 1.0)])
                .unwrap();
        let mut rng = seeded(5);
        let pts = dom.sample_interior(10_000, &mut rng);
        let mut counts = [0usize; 4];
        for p in &pts {
            let q = (p[0] > 0.0) as usize * 2 + (p[1] > 0.0) as usize;
            counts[q] += 1;
        }
        // binomial 3σ bound: 2500 ± 3·sqrt(10000·0.25·0.75) ≈ 2500 ± 130
        for &c in &counts {
            assert!((c as i64 - 2500).abs() < 150, "quadrant count {c} outside 3σ band");
        }
    }

    #[test]
    fn empty_sample_is_empty() {
        let mut rng = seeded(1);
        assert!(Domain::burgers().sample_interior(0, &mut rng).is_empty());
    }

    #[test]
    fn initial_face_sampling_pins_t() {
        let dom = Domain::burgers();
        let mut rng = seeded(2);
        let pts = dom.sample_boundary(100, &mut rng, &FaceSelector::InitialTime).unwrap();
        assert_eq!(pts.len(), 100);
        assert!(pts.iter().all(|p| p[1] == 0.0));
    }

    #[test]
    fn spatial_boundary_of_burgers_is_x_faces() {
        let dom = Domain::burgers();
        let mut rng = seeded(2);
        let pts = dom.sample_boundary(200, &mut rng, &FaceSelector::SpatialBoundary).unwrap();
        assert!(pts.iter().all(|p| p[0] == -1.0 || p[0] == 1.0));
        assert!(pts.iter().any(|p| p[0] == -1.0));
        assert!(pts.iter().any(|p| p[0] == 1.0));
    }

    #[test]
    fn lshape_boundary_points_satisfy_predicate() {
        let dom = Domain::l_shape();
        let mut rng = seeded(9);
        let pts = dom.sample_boundary(1000, &mut rng, &FaceSelector::AllFaces).unwrap();
        for p in &pts {
            assert!(dom.on_boundary(p), "{p:?} not on boundary");
        }
        // reentrant faces are sampled too
        assert!(pts.iter().any(|p| (p[0] - 0.0).abs() < 1e-12 && p[1] > 0.0));
        assert!(pts.iter().any(|p| (p[1] - 0.0).abs() < 1e-12 && p[0] > 0.0));
    }

    #[test]
    fn lshape_boundary_measure_is_eight() {
        let dom = Domain::l_shape();
        let total: f64 = dom.faces().iter().map(|f| f.measure(f.axis)).sum();
        assert_abs_diff_eq!(total, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_face_selection_is_config_error() {
        let dom = Domain::l_shape(); // no temporal axis
        let mut rng = seeded(1);
        let res = dom.sample_boundary(10, &mut rng, &FaceSelector::InitialTime);
        assert!(matches!(res, Err(Error::Config(_))));
    }

    #[test]
    fn subdomain_mean_of_constant_is_abs_constant() {
        let cell = Cell { lo: vec![0.0, 0.0], hi: vec![0.5, 2.0], index: vec![0, 0] };
        let rule = gauss_legendre(4).unwrap();
        let m = subdomain_mean(&mut |_x| -3.25, &cell, &rule);
        assert_abs_diff_eq!(m, 3.25, epsilon = 1e-13);
    }

    #[test]
    fn subdomain_mean_of_x_on_unit_cell() {
        let cell = Cell { lo: vec![0.0], hi: vec![1.0], index: vec![0] };
        let rule = gauss_legendre(4).unwrap();
        let m = subdomain_mean(&mut |x| x[0], &cell, &rule);
        assert_abs_diff_eq!(m, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn subdomain_mean_exact_for_high_degree_polynomials() {
        // With an n-point rule, products of per-axis degree ≤ 2n−1 polynomials
        // integrate exactly; mean of x^7 y^6 over [0,1]² is 1/(8·7).
        let cell = Cell { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0], index: vec![0, 0] };
        let rule = gauss_legendre(4).unwrap();
        let m = subdomain_mean(&mut |p| p[0].powi(7) * p[1].powi(6), &cell, &rule);
        assert_abs_diff_eq!(m, 1.0 / 56.0, epsilon = 1e-12);
    }

    #[test]
    fn sampling_is_reproducible() {
        let dom = Domain::l_shape();
        let a = dom.sample_interior(64, &mut seeded(123));
        let b = dom.sample_interior(64, &mut seeded(123));
        assert_eq!(a, b);
    }
}
