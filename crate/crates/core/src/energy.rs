//! Discrete nonlocal energy `B_h(u, u)`, the p-form `B_h(u, w)`, the gradient of
//! the volume-constrained objective, and the local weighted p-Dirichlet energy.
//!
//! All double integrals are evaluated as sums over lattice offsets within the
//! horizon: a pair `(x_i, x_j = x_i + m·h)` contributes
//! `w_i w_j H_ij κ(m) |u_j − u_i|^p`, where `w` are node weights of the
//! integration region and `κ(m)` carries the kernel and the `|m·h|^{-p}` factor.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficient::Coefficient;
use crate::domain::{offsets_in_box, Domain, Grid};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::quadrature::{self, GaussLegendre};

/// Nodal values of a field on a grid, with a mask of nodes forced to zero.
#[derive(Clone, Debug)]
pub struct ScalarField<'g> {
    grid: &'g Grid,
    values: Vec<f64>,
    constrained: Vec<bool>,
}

impl<'g> ScalarField<'g> {
    /// Unconstrained field sampled from `f` at every node.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: &'g Grid, f: F) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        ScalarField { grid, values, constrained: vec![false; grid.len()] }
    }

    /// Unconstrained field with the given nodal values.
    pub fn from_values(grid: &'g Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(ScalarField { grid, values, constrained: vec![false; grid.len()] })
    }

    /// Member of the discrete `X_0`: `f` at interior nodes, zero on the collar.
    pub fn x0_from_fn<F: Fn(&[f64]) -> f64>(grid: &'g Grid, f: F) -> Self {
        let constrained: Vec<bool> = (0..grid.len()).map(|i| !grid.is_interior(i)).collect();
        let values = (0..grid.len())
            .map(|i| if constrained[i] { 0.0 } else { f(grid.node(i)) })
            .collect();
        ScalarField { grid, values, constrained }
    }

    pub fn x0_zeros(grid: &'g Grid) -> Self {
        Self::x0_from_fn(grid, |_| 0.0)
    }

    /// Builds a constrained field from raw values; constrained entries are zeroed.
    pub fn x0_from_values(grid: &'g Grid, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        let constrained: Vec<bool> = (0..grid.len()).map(|i| !grid.is_interior(i)).collect();
        for (v, &c) in values.iter_mut().zip(&constrained) {
            if c {
                *v = 0.0;
            }
        }
        Ok(ScalarField { grid, values, constrained })
    }

    pub fn grid(&self) -> &'g Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn is_constrained(&self, i: usize) -> bool {
        self.constrained[i]
    }

    pub fn constrained_mask(&self) -> &[bool] {
        &self.constrained
    }

    pub fn free_indices(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| !self.constrained[i]).collect()
    }

    /// Overwrites the free values; constrained nodes stay zero.
    pub fn set_free(&mut self, i: usize, v: f64) {
        if !self.constrained[i] {
            self.values[i] = v;
        }
    }

    pub fn same_grid(&self, other: &ScalarField<'_>) -> bool {
        std::ptr::eq(self.grid, other.grid)
    }

    pub fn scaled(&self, c: f64) -> ScalarField<'g> {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
            constrained: self.constrained.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    /// `κ(m) = k(|m h|) / |m h|^p` for offsets strictly inside the horizon.
    NodeMidpoint,
    /// `κ(m) = K̄(m) / |m h|^p` with `K̄(m)` the average of the kernel over the
    /// lattice cell around `m h`; the kernel mass of the cell at the origin is
    /// shared equally among the first ring of offsets.
    CellAverage,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalPolicy {
    Skip,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureScheme {
    pub rule: QuadratureRule,
    pub diagonal: DiagonalPolicy,
}

impl Default for QuadratureScheme {
    fn default() -> Self {
        QuadratureScheme { rule: QuadratureRule::CellAverage, diagonal: DiagonalPolicy::Skip }
    }
}

impl QuadratureScheme {
    pub fn node_midpoint() -> Self {
        QuadratureScheme { rule: QuadratureRule::NodeMidpoint, diagonal: DiagonalPolicy::Skip }
    }
}

/// Integration region of the double integral.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    /// `Ω × Ω`
    Omega,
    /// `Ω_δ × Ω_δ`, the full grid box.
    OmegaDelta,
    /// `D × D` for a box `D` inside the grid (e.g. a shrunken domain).
    Subdomain(Domain),
}

impl Region {
    /// Node weights of the region on `grid`.
    pub fn weights(&self, grid: &Grid) -> Vec<f64> {
        match self {
            Region::Omega => grid.trapezoid_weights(grid.domain()),
            Region::OmegaDelta => grid.full_weights(),
            Region::Subdomain(d) => grid.trapezoid_weights(d),
        }
    }
}

/// Lattice offsets within the horizon and their weights `κ(m)`.
#[derive(Clone, Debug)]
pub struct OffsetStencil {
    pub offsets: Vec<Vec<i64>>,
    pub weights: Vec<f64>,
}

impl OffsetStencil {
    pub fn new(grid: &Grid, kernel: &Kernel, rule: QuadratureRule) -> Result<Self> {
        if kernel.dim() != grid.dim() {
            return Err(Error::Kernel(format!(
                "kernel dimension {} does not match grid dimension {}",
                kernel.dim(),
                grid.dim()
            )));
        }
        let p = kernel.p();
        let h = grid.spacing();
        let dist = |m: &[i64]| -> f64 { m.iter().zip(h).map(|(&c, s)| (c as f64 * s).powi(2)).sum::<f64>().sqrt() };
        match rule {
            QuadratureRule::NodeMidpoint => {
                let offsets = grid.offsets_within(kernel.delta());
                let weights = offsets
                    .iter()
                    .map(|m| {
                        let r = dist(m);
                        kernel.eval(r) / r.powf(p)
                    })
                    .collect();
                Ok(OffsetStencil { offsets, weights })
            }
            QuadratureRule::CellAverage => {
                let delta = kernel.delta();
                let reach: Vec<i64> = h.iter().map(|s| (delta / s).ceil() as i64 + 1).collect();
                let cell_volume: f64 = h.iter().product();
                let mut offsets = Vec::new();
                let mut masses = Vec::new();
                let mut diagonal_mass = 0.0;
                offsets_in_box(&reach, |m| {
                    let lo: Vec<f64> = m.iter().zip(h).map(|(&c, s)| (c as f64 - 0.5) * s).collect();
                    let hi: Vec<f64> = m.iter().zip(h).map(|(&c, s)| (c as f64 + 0.5) * s).collect();
                    let mass = cell_kernel_mass(kernel, &lo, &hi);
                    if m.iter().all(|&c| c == 0) {
                        diagonal_mass = mass;
                    } else if mass > 0.0 {
                        offsets.push(m.to_vec());
                        masses.push(mass);
                    }
                });
                let ring: Vec<usize> = (0..offsets.len())
                    .filter(|&k| offsets[k].iter().map(|c| c.abs()).max() == Some(1))
                    .collect();
                if ring.is_empty() {
                    return Err(Error::Grid("horizon is smaller than the grid spacing".into()));
                }
                let share = diagonal_mass / ring.len() as f64;
                for &k in &ring {
                    masses[k] += share;
                }
                // reproduce the kernel mass exactly
                let total: f64 = masses.iter().sum();
                let fix = kernel.mass() / total;
                let weights: Vec<f64> = offsets
                    .iter()
                    .zip(&masses)
                    .map(|(m, &mass)| fix * mass / cell_volume / dist(m).powf(p))
                    .collect();
                let mut paired: Vec<(Vec<i64>, f64)> = offsets.into_iter().zip(weights).collect();
                paired.sort_by_key(|(m, _)| grid.linear_offset(m));
                let (offsets, weights) = paired.into_iter().unzip();
                Ok(OffsetStencil { offsets, weights })
            }
        }
    }
}

/// `∫_{[lo, hi]} k(|s|) ds` over one lattice cell.
fn cell_kernel_mass(kernel: &Kernel, lo: &[f64], hi: &[f64]) -> f64 {
    let delta = kernel.delta();
    match lo.len() {
        1 => {
            // profiles are polynomial in |s| on each side of the origin
            let a = lo[0].max(-delta);
            let b = hi[0].min(delta);
            if b <= a {
                return 0.0;
            }
            let rule = quadrature::gl8();
            let f = |s: f64| kernel.eval(s.abs());
            if a < 0.0 && b > 0.0 {
                rule.integrate(f, a, 0.0) + rule.integrate(f, 0.0, b)
            } else {
                rule.integrate(f, a, b)
            }
        }
        _ => {
            let rule = GaussLegendre::new(6);
            square_kernel_mass(kernel, &rule, [lo[0], lo[1]], [hi[0], hi[1]], 0)
        }
    }
}

const CELL_SPLIT_DEPTH: usize = 9;

fn square_kernel_mass(kernel: &Kernel, rule: &GaussLegendre, lo: [f64; 2], hi: [f64; 2], depth: usize) -> f64 {
    let delta = kernel.delta();
    let nearest: f64 = (0..2)
        .map(|a| if lo[a] > 0.0 { lo[a] } else if hi[a] < 0.0 { -hi[a] } else { 0.0 })
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    if nearest >= delta {
        return 0.0;
    }
    let farthest: f64 = (0..2).map(|a| lo[a].abs().max(hi[a].abs()).powi(2)).sum::<f64>().sqrt();
    let touches_origin = nearest == 0.0;
    if (farthest <= delta && !touches_origin) || depth >= CELL_SPLIT_DEPTH {
        let mut acc = 0.0;
        for (y, wy) in rule.mapped(lo[1], hi[1]) {
            for (x, wx) in rule.mapped(lo[0], hi[0]) {
                acc += wx * wy * kernel.eval((x * x + y * y).sqrt());
            }
        }
        return acc;
    }
    let mx = 0.5 * (lo[0] + hi[0]);
    let my = 0.5 * (lo[1] + hi[1]);
    square_kernel_mass(kernel, rule, [lo[0], lo[1]], [mx, my], depth + 1)
        + square_kernel_mass(kernel, rule, [mx, lo[1]], [hi[0], my], depth + 1)
        + square_kernel_mass(kernel, rule, [lo[0], my], [mx, hi[1]], depth + 1)
        + square_kernel_mass(kernel, rule, [mx, my], [hi[0], hi[1]], depth + 1)
}

/// Symmetric pair operator in compressed rows: entry `(i, j)` holds
/// `c_ij = w_i w_j W(i, j) κ(x_j − x_i)`, both orientations stored.
#[derive(Clone, Debug)]
pub struct PairOperator {
    n: usize,
    p: f64,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    coefs: Vec<f64>,
}

/// Rows per parallel task; fixed so that reductions are reproducible.
const ROW_CHUNK: usize = 256;

impl PairOperator {
    /// Assembles the operator for node weights `w` and a symmetric pair weight.
    pub fn assemble<W: Fn(usize, usize) -> f64 + Sync>(
        grid: &Grid,
        kernel: &Kernel,
        scheme: &QuadratureScheme,
        node_weights: &[f64],
        pair_weight: W,
    ) -> Result<PairOperator> {
        let collar = grid.collar_width();
        if kernel.delta() > collar * (1.0 + 1e-12) {
            return Err(Error::HorizonExceedsCollar { delta: kernel.delta(), collar });
        }
        let stencil = OffsetStencil::new(grid, kernel, scheme.rule)?;
        let n = grid.len();
        let rows: Vec<Vec<(usize, f64)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let wi = node_weights[i];
                if wi == 0.0 {
                    return Vec::new();
                }
                let mut row = Vec::new();
                for (m, &kappa) in stencil.offsets.iter().zip(&stencil.weights) {
                    if let Some(j) = grid.shifted(i, m) {
                        let wj = node_weights[j];
                        if wj == 0.0 {
                            continue;
                        }
                        let c = wi * wj * pair_weight(i, j) * kappa;
                        if c != 0.0 {
                            row.push((j, c));
                        }
                    }
                }
                row
            })
            .collect();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut coefs = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (j, c) in row {
                cols.push(j);
                coefs.push(c);
            }
            row_ptr.push(cols.len());
        }
        Ok(PairOperator { n, p: kernel.p(), row_ptr, cols, coefs })
    }

    /// Operator with the midpoint weight `H(x_i, x_j)` of `h`.
    pub fn midpoint(grid: &Grid, h: &Coefficient, kernel: &Kernel, scheme: &QuadratureScheme, region: &Region) -> Result<PairOperator> {
        let hv = h.nodal_values(grid);
        let w = region.weights(grid);
        Self::assemble(grid, kernel, scheme, &w, |i, j| 0.5 * (hv[i] + hv[j]))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.coefs[r].iter().copied())
    }

    fn chunked_sum<F: Fn(usize) -> f64 + Sync>(&self, f: F) -> f64 {
        let partial: Vec<f64> = (0..self.n.div_ceil(ROW_CHUNK))
            .into_par_iter()
            .map(|c| {
                let lo = c * ROW_CHUNK;
                let hi = (lo + ROW_CHUNK).min(self.n);
                (lo..hi).map(&f).sum::<f64>()
            })
            .collect();
        partial.iter().sum()
    }

    /// `Σ_i Σ_j c_ij |u_j − u_i|^p`.
    pub fn energy(&self, u: &[f64]) -> f64 {
        let p = self.p;
        self.chunked_sum(|i| self.row(i).map(|(j, c)| c * pow_abs(u[j] - u[i], p)).sum::<f64>())
    }

    /// `energy(u + t d) − energy(u)`, summed pair by pair without cancellation
    /// against the total.
    pub fn energy_change(&self, u: &[f64], d: &[f64], t: f64) -> f64 {
        let p = self.p;
        self.chunked_sum(|i| {
            self.row(i)
                .map(|(j, c)| c * power_change(u[j] - u[i], t * (d[j] - d[i]), p))
                .sum::<f64>()
        })
    }

    /// `Σ_i Σ_j c_ij |Δu|^{p−2} Δu Δw` with `Δu = u_j − u_i`.
    pub fn form(&self, u: &[f64], w: &[f64]) -> f64 {
        let p = self.p;
        self.chunked_sum(|i| {
            self.row(i)
                .map(|(j, c)| {
                    let du = u[j] - u[i];
                    c * signed_pow(du, p - 1.0) * (w[j] - w[i])
                })
                .sum::<f64>()
        })
    }

    /// Gradient of `(1/p) · energy(u)`: `2 Σ_j c_ij |u_i − u_j|^{p−2}(u_i − u_j)`.
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let p = self.p;
        (0..self.n)
            .into_par_iter()
            .with_min_len(ROW_CHUNK)
            .map(|i| 2.0 * self.row(i).map(|(j, c)| c * signed_pow(u[i] - u[j], p - 1.0)).sum::<f64>())
            .collect()
    }
}

#[inline]
fn pow_abs(d: f64, p: f64) -> f64 {
    if p == 2.0 {
        d * d
    } else {
        d.abs().powf(p)
    }
}

/// `|a + s|^p − |a|^p`, accurate also when `|s| ≪ |a|`.
#[inline]
fn power_change(a: f64, s: f64, p: f64) -> f64 {
    if p == 2.0 {
        s * (2.0 * a + s)
    } else if a == 0.0 {
        s.abs().powf(p)
    } else {
        let r = s / a;
        if r.abs() < 0.5 {
            a.abs().powf(p) * (p * r.ln_1p()).exp_m1()
        } else {
            (a + s).abs().powf(p) - a.abs().powf(p)
        }
    }
}

/// `|d|^{q−1} d`, i.e. `|d|^{p−2} d` for `q = p − 1`.
#[inline]
fn signed_pow(d: f64, q: f64) -> f64 {
    if q == 1.0 {
        d
    } else if d == 0.0 {
        0.0
    } else {
        d.signum() * d.abs().powf(q)
    }
}

/// `B_h(u, u)` over `Ω × Ω` or `Ω_δ × Ω_δ` (or a sub-box).
pub fn nonlocal_energy(u: &ScalarField<'_>, h: &Coefficient, k: &Kernel, q: &QuadratureScheme, region: &Region) -> Result<f64> {
    let op = PairOperator::midpoint(u.grid(), h, k, q, region)?;
    Ok(op.energy(u.values()))
}

/// The p-form `B_h(u, w)` over `Ω_δ × Ω_δ`; linear in `w`.
pub fn nonlocal_form(u: &ScalarField<'_>, w: &ScalarField<'_>, h: &Coefficient, k: &Kernel, q: &QuadratureScheme) -> Result<f64> {
    if !u.same_grid(w) {
        return Err(Error::GridMismatch);
    }
    let op = PairOperator::midpoint(u.grid(), h, k, q, &Region::OmegaDelta)?;
    Ok(op.form(u.values(), w.values()))
}

/// `∫_Ω f w` with trapezoidal node weights; `f` is taken as zero on the collar.
pub fn load(f: &ScalarField<'_>, w: &ScalarField<'_>) -> Result<f64> {
    if !f.same_grid(w) {
        return Err(Error::GridMismatch);
    }
    let weights = Region::Omega.weights(f.grid());
    Ok(weights
        .iter()
        .zip(f.values().iter().zip(w.values()))
        .map(|(wt, (a, b))| wt * a * b)
        .sum())
}

/// Per-node gradient of the load term `∫_Ω f w` with respect to `w`.
pub fn load_vector(f: &ScalarField<'_>) -> Vec<f64> {
    let weights = Region::Omega.weights(f.grid());
    weights.iter().zip(f.values()).map(|(w, v)| w * v).collect()
}

/// `J(u) = (1/p) B_h(u, u) − ∫ f u` over `Ω_δ`.
pub fn objective(u: &ScalarField<'_>, f: &ScalarField<'_>, h: &Coefficient, k: &Kernel, q: &QuadratureScheme) -> Result<f64> {
    let e = nonlocal_energy(u, h, k, q, &Region::OmegaDelta)?;
    Ok(e / k.p() - load(f, u)?)
}

/// Partial derivatives of `J` with respect to the nodal values, one entry per
/// node; entries of constrained nodes are zero.
pub fn energy_gradient(u: &ScalarField<'_>, f: &ScalarField<'_>, h: &Coefficient, k: &Kernel, q: &QuadratureScheme) -> Result<Vec<f64>> {
    if !u.same_grid(f) {
        return Err(Error::GridMismatch);
    }
    let op = PairOperator::midpoint(u.grid(), h, k, q, &Region::OmegaDelta)?;
    Ok(objective_gradient(&op, u, &load_vector(f)))
}

pub(crate) fn objective_gradient(op: &PairOperator, u: &ScalarField<'_>, load: &[f64]) -> Vec<f64> {
    let mut g = op.gradient(u.values());
    for (i, gi) in g.iter_mut().enumerate() {
        if u.is_constrained(i) {
            *gi = 0.0;
        } else {
            *gi -= load[i];
        }
    }
    g
}

/// `∫_Ω h |∇u|^p` by trapezoidal weights on the closed box, with centered
/// differences inside and second-order one-sided differences on the boundary.
pub fn local_energy(u: &ScalarField<'_>, h: &Coefficient, p: f64) -> f64 {
    let grid = u.grid();
    let weights = Region::Omega.weights(grid);
    let hv = h.nodal_values(grid);
    let dim = grid.dim();
    let mut acc = 0.0;
    for i in 0..grid.len() {
        if weights[i] == 0.0 {
            continue;
        }
        let mut g2 = 0.0;
        for a in 0..dim {
            let d = axis_derivative(grid, u.values(), i, a);
            g2 += d * d;
        }
        acc += weights[i] * hv[i] * g2.sqrt().powf(p);
    }
    acc
}

/// Gradient component along `axis` at node `i` using only nodes of the closed box.
fn axis_derivative(grid: &Grid, u: &[f64], i: usize, axis: usize) -> f64 {
    let h = grid.spacing()[axis];
    let mut step = vec![0i64; grid.dim()];
    let mut neighbor = |k: i64| -> Option<usize> {
        step[axis] = k;
        grid.shifted(i, &step).filter(|&j| grid.domain().contains_closed(&nudge(grid, j, i)))
    };
    let fwd = neighbor(1);
    let bwd = neighbor(-1);
    match (bwd, fwd) {
        (Some(b), Some(f)) => (u[f] - u[b]) / (2.0 * h),
        (None, Some(f)) => match neighbor(2) {
            Some(f2) => (-3.0 * u[i] + 4.0 * u[f] - u[f2]) / (2.0 * h),
            None => (u[f] - u[i]) / h,
        },
        (Some(b), None) => match neighbor(-2) {
            Some(b2) => (3.0 * u[i] - 4.0 * u[b] + u[b2]) / (2.0 * h),
            None => (u[i] - u[b]) / h,
        },
        (None, None) => 0.0,
    }
}

/// Coordinates of node `j`, pulled a hair toward node `i` so that boundary
/// nodes test as members of the closed box despite rounding.
fn nudge(grid: &Grid, j: usize, i: usize) -> Vec<f64> {
    let xi = grid.node(i);
    grid.node(j).iter().zip(xi).map(|(a, b)| a + 1e-9 * (b - a)).collect()
}
