//! Boxes, their enlargements and shrinkings, and uniform tensor grids over the
//! enlarged box with interior/collar node classification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An open axis-aligned box in one or two dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Domain("lower and upper corners differ in length".into()));
        }
        if !(1..=2).contains(&lower.len()) {
            return Err(Error::Domain(format!("dimension {} not in {{1, 2}}", lower.len())));
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !(l.is_finite() && u.is_finite() && u > l) {
                return Err(Error::Domain(format!("side [{l}, {u}] is empty or not finite")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The open unit interval or unit square.
    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim], vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn measure(&self) -> f64 {
        (0..self.dim()).map(|a| self.side(a)).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    pub fn contains_open(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&v, (&l, &u))| v > l && v < u)
    }

    pub fn contains_closed(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&v, (&l, &u))| v >= l && v <= u)
    }

    /// The box fattened by `delta` along every axis.
    pub fn enlarge(&self, delta: f64) -> Domain {
        Domain {
            lower: self.lower.iter().map(|l| l - delta).collect(),
            upper: self.upper.iter().map(|u| u + delta).collect(),
        }
    }

    /// The box of points at distance greater than `r` from the boundary.
    pub fn shrink(&self, r: f64) -> Result<Domain> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("shrink radius {r} is negative")));
        }
        let half_min = (0..self.dim()).map(|a| 0.5 * self.side(a)).fold(f64::INFINITY, f64::min);
        if r >= half_min {
            return Err(Error::Domain(format!(
                "shrinking by {r} empties a box with half-side {half_min}"
            )));
        }
        Domain::new(
            self.lower.iter().map(|l| l + r).collect(),
            self.upper.iter().map(|u| u - r).collect(),
        )
    }

    /// Interiors of the two boxes intersect.
    pub fn overlaps_open(&self, other: &Domain) -> bool {
        (0..self.dim()).all(|a| self.lower[a] < other.upper[a] && other.lower[a] < self.upper[a])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeClass {
    Interior,
    Collar,
}

/// Uniform tensor grid over `[lower - collar, upper + collar]`.
#[derive(Clone, Debug)]
pub struct Grid {
    domain: Domain,
    n_per_axis: Vec<usize>,
    spacing: Vec<f64>,
    collar_width: f64,
    coords: Vec<f64>,
    node_class: Vec<NodeClass>,
}

/// Largest number of horizon multiples tried when snapping the node count.
const MAX_SNAP_STEPS: usize = 100_000;

impl Grid {
    /// Builds a grid over the `delta`-enlargement of `domain` with at least `n[i]`
    /// nodes per axis; counts are raised until `delta` is an integer multiple of
    /// the spacing along every axis.
    pub fn build(domain: &Domain, n: &[usize], delta: f64) -> Result<Grid> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Grid(format!("horizon {delta} must be positive")));
        }
        if n.len() != domain.dim() {
            return Err(Error::Grid(format!(
                "{} node counts given for a {}-dimensional domain",
                n.len(),
                domain.dim()
            )));
        }
        let mut n_per_axis = Vec::with_capacity(n.len());
        let mut spacing = Vec::with_capacity(n.len());
        for (axis, &requested) in n.iter().enumerate() {
            if requested < 3 {
                return Err(Error::Grid(format!("axis {axis}: need at least 3 nodes, got {requested}")));
            }
            let (count, h) = snap_axis(domain.side(axis), delta, requested).ok_or_else(|| {
                Error::Grid(format!(
                    "axis {axis}: horizon {delta} is not commensurate with side {}",
                    domain.side(axis)
                ))
            })?;
            let interior = (domain.side(axis) / h).round() as usize;
            if interior < 3 {
                return Err(Error::Grid(format!(
                    "axis {axis}: only {} interior nodes",
                    interior.saturating_sub(1)
                )));
            }
            n_per_axis.push(count);
            spacing.push(h);
        }
        let origin: Vec<f64> = domain.lower().iter().map(|l| l - delta).collect();
        let total: usize = n_per_axis.iter().product();
        let dim = domain.dim();
        let mut coords = Vec::with_capacity(total * dim);
        let mut node_class = Vec::with_capacity(total);
        let mut multi = vec![0usize; dim];
        for idx in 0..total {
            unflatten(idx, &n_per_axis, &mut multi);
            let mut inside = true;
            for a in 0..dim {
                let x = origin[a] + spacing[a] * multi[a] as f64;
                coords.push(x);
                // nodes on the boundary of the box count as collar
                let tol = 1e-9 * spacing[a];
                if !(x > domain.lower()[a] + tol && x < domain.upper()[a] - tol) {
                    inside = false;
                }
            }
            node_class.push(if inside { NodeClass::Interior } else { NodeClass::Collar });
        }
        Ok(Grid {
            domain: domain.clone(),
            n_per_axis,
            spacing,
            collar_width: delta,
            coords,
            node_class,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn n_per_axis(&self) -> &[usize] {
        &self.n_per_axis
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(0.0, f64::max)
    }

    pub fn collar_width(&self) -> f64 {
        self.collar_width
    }

    pub fn len(&self) -> usize {
        self.node_class.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_class.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn node_class(&self, i: usize) -> NodeClass {
        self.node_class[i]
    }

    pub fn is_interior(&self, i: usize) -> bool {
        self.node_class[i] == NodeClass::Interior
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Multi-index of node `i` (axis 0 varies fastest).
    pub fn multi_index(&self, i: usize) -> Vec<usize> {
        let mut m = vec![0; self.dim()];
        unflatten(i, &self.n_per_axis, &mut m);
        m
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for (a, &m) in multi.iter().enumerate() {
            idx += m * stride;
            stride *= self.n_per_axis[a];
        }
        idx
    }

    /// Node reached from `i` by an integer offset, if it lies on the grid.
    pub fn shifted(&self, i: usize, offset: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        let mut stride = 1usize;
        let mut rest = i;
        for (a, &o) in offset.iter().enumerate() {
            let n = self.n_per_axis[a];
            let m = (rest % n) as i64 + o;
            rest /= n;
            if m < 0 || m >= n as i64 {
                return None;
            }
            idx += m as usize * stride;
            stride *= n;
        }
        Some(idx)
    }

    /// Index along `axis` of the first node on the closed box (the lower boundary).
    pub fn boundary_index(&self, axis: usize) -> usize {
        (self.collar_width / self.spacing[axis]).round() as usize
    }

    /// Coordinates of node `i`, with components lying within rounding distance
    /// of a face of `region` moved onto that face.
    pub fn snapped_node(&self, i: usize, region: &Domain) -> Vec<f64> {
        let mut x = self.node(i).to_vec();
        for (a, v) in x.iter_mut().enumerate() {
            let tol = 1e-9 * self.spacing[a];
            for face in [region.lower()[a], region.upper()[a]] {
                if (*v - face).abs() <= tol {
                    *v = face;
                }
            }
        }
        x
    }

    /// Nodes lying in the closure of `region`, a box aligned with this grid.
    pub fn nodes_in_closed(&self, region: &Domain) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.contains_closed_tol(region, self.node(i))).collect()
    }

    fn contains_closed_tol(&self, region: &Domain, x: &[f64]) -> bool {
        (0..self.dim()).all(|a| {
            let tol = 1e-9 * self.spacing[a];
            x[a] >= region.lower()[a] - tol && x[a] <= region.upper()[a] + tol
        })
    }

    /// Node quadrature weights for the box `region`: each node carries the
    /// measure of its dual cell intersected with the box. For boxes with faces on
    /// grid lines these are the composite trapezoidal weights.
    pub fn trapezoid_weights(&self, region: &Domain) -> Vec<f64> {
        let d = self.dim();
        (0..self.len())
            .map(|i| {
                let x = self.node(i);
                let mut w = 1.0;
                for a in 0..d {
                    let h = self.spacing[a];
                    let lo = (x[a] - 0.5 * h).max(region.lower()[a]);
                    let hi = (x[a] + 0.5 * h).min(region.upper()[a]);
                    let len = hi - lo;
                    if len <= 1e-12 * h {
                        return 0.0;
                    }
                    w *= if (len - h).abs() <= 1e-12 * h {
                        h
                    } else if (len - 0.5 * h).abs() <= 1e-12 * h {
                        0.5 * h
                    } else {
                        len
                    };
                }
                w
            })
            .collect()
    }

    /// Trapezoidal weights of the whole grid box (the enlarged domain).
    pub fn full_weights(&self) -> Vec<f64> {
        self.trapezoid_weights(&self.domain.enlarge(self.collar_width))
    }

    /// Lattice offsets whose Euclidean length is strictly below `radius`.
    pub fn offsets_within(&self, radius: f64) -> Vec<Vec<i64>> {
        let reach: Vec<i64> = self.spacing.iter().map(|h| (radius / h).ceil() as i64).collect();
        let mut out = Vec::new();
        for_each_offset(&reach, |m| {
            if m.iter().all(|&c| c == 0) {
                return;
            }
            let r2: f64 = m.iter().zip(&self.spacing).map(|(&c, h)| (c as f64 * h).powi(2)).sum();
            let r = r2.sqrt();
            if r < radius - 1e-9 * self.max_spacing() {
                out.push(m.to_vec());
            }
        });
        out.sort_by_key(|m| self.linear_offset(m));
        out
    }

    /// Signed flat-index displacement of an offset.
    pub fn linear_offset(&self, m: &[i64]) -> i64 {
        let mut stride = 1i64;
        let mut acc = 0i64;
        for (a, &c) in m.iter().enumerate() {
            acc += c * stride;
            stride *= self.n_per_axis[a] as i64;
        }
        acc
    }

    /// Unordered pairs `(i, j)`, `i < j`, with `|x_i - x_j| < delta`, in
    /// lexicographic order.
    pub fn neighbor_pairs(&self, delta: f64) -> impl Iterator<Item = (usize, usize)> + '_ {
        let forward: Vec<Vec<i64>> = self
            .offsets_within(delta)
            .into_iter()
            .filter(|m| self.linear_offset(m) > 0)
            .collect();
        (0..self.len()).flat_map(move |i| {
            forward
                .iter()
                .filter_map(|m| self.shifted(i, m).map(|j| (i, j)))
                .collect::<Vec<_>>()
        })
    }
}

/// Smallest node count `>= requested` for which `delta` is a whole number of
/// spacings on an axis of length `side + 2 delta`.
fn snap_axis(side: f64, delta: f64, requested: usize) -> Option<(usize, f64)> {
    let ratio = (side + 2.0 * delta) / delta;
    let first = (((requested - 1) as f64) / ratio - 1e-9).ceil().max(1.0) as usize;
    for m in first..first + MAX_SNAP_STEPS {
        let cells = m as f64 * ratio;
        let rounded = cells.round();
        if (cells - rounded).abs() <= 1e-9 * rounded.max(1.0) && rounded as usize + 1 >= requested {
            let count = rounded as usize + 1;
            let h = delta / m as f64;
            return Some((count, h));
        }
    }
    None
}

fn unflatten(mut idx: usize, n: &[usize], out: &mut [usize]) {
    for (a, &na) in n.iter().enumerate() {
        out[a] = idx % na;
        idx /= na;
    }
}

fn for_each_offset<F: FnMut(&[i64])>(reach: &[i64], mut f: F) {
    match reach.len() {
        1 => {
            for a in -reach[0]..=reach[0] {
                f(&[a]);
            }
        }
        2 => {
            for b in -reach[1]..=reach[1] {
                for a in -reach[0]..=reach[0] {
                    f(&[a, b]);
                }
            }
        }
        _ => unreachable!("grids are one- or two-dimensional"),
    }
}

/// Calls `f` on every integer offset in the box `[-reach, reach]`.
pub(crate) fn offsets_in_box<F: FnMut(&[i64])>(reach: &[i64], f: F) {
    for_each_offset(reach, f)
}
