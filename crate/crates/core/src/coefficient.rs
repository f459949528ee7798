//! Coefficients `h` with values in `[h_min, h_max]` on the box and zero outside,
//! the midpoint weight `H(x', x) = (h(x') + h(x))/2`, simple-function
//! approximants and mollified coefficients.

use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{Domain, Grid};
use crate::error::{Error, Result};
use crate::field::FieldExpr;
use crate::quadrature::{self, GaussLegendre};

/// One block `B_i` of a simple coefficient: the half-open box
/// `[lower, upper)` carrying the value `h_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub cell: Domain,
    pub value: f64,
}

impl Block {
    fn contains_half_open(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.cell.lower().iter().zip(self.cell.upper()))
            .all(|(&v, (&l, &u))| v >= l && v < u)
    }
}

/// Nodal samples on a uniform lattice, interpolated multilinearly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Samples {
    origin: Vec<f64>,
    spacing: Vec<f64>,
    n: Vec<usize>,
    values: Vec<f64>,
}

impl Samples {
    pub fn from_grid(grid: &Grid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len());
        Samples {
            origin: grid.node(0).to_vec(),
            spacing: grid.spacing().to_vec(),
            n: grid.n_per_axis().to_vec(),
            values,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn interpolate(&self, x: &[f64]) -> f64 {
        let d = self.n.len();
        let mut base = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for a in 0..d {
            let t = (x[a] - self.origin[a]) / self.spacing[a];
            let last = (self.n[a] - 1) as f64;
            let t = t.clamp(0.0, last);
            let i = (t.floor() as usize).min(self.n[a] - 2);
            base[a] = i;
            frac[a] = t - i as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut idx = 0;
            let mut stride = 1;
            for a in 0..d {
                let bit = (corner >> a) & 1;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                idx += (base[a] + bit) * stride;
                stride *= self.n[a];
            }
            if w != 0.0 {
                acc += w * self.values[idx];
            }
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientKind {
    ClosedForm(FieldExpr),
    Simple(Vec<Block>),
    Sampled(Samples),
}

/// A member of the admissible class: bounded between `h_min > 0` and `h_max`
/// on the open box, zero outside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    domain: Domain,
    kind: CoefficientKind,
    h_min: f64,
    h_max: f64,
}

/// Points per axis used to validate bounds of closed-form coefficients.
const BOUND_PROBES_1D: usize = 10_000;
const BOUND_PROBES_2D: usize = 100;

impl Coefficient {
    /// Closed-form coefficient; the declared bounds are validated on a probe set.
    pub fn closed_form(domain: &Domain, expr: FieldExpr, h_min: f64, h_max: f64) -> Result<Self> {
        check_bounds(h_min, h_max)?;
        let c = Coefficient { domain: domain.clone(), kind: CoefficientKind::ClosedForm(expr), h_min, h_max };
        c.validate_bounds()?;
        Ok(c)
    }

    /// Closed-form coefficient with bounds taken from a dense probe set.
    pub fn from_expr(domain: &Domain, expr: FieldExpr) -> Result<Self> {
        let (lo, hi) = probe_points(domain)
            .iter()
            .map(|x| expr.eval(x))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        Self::closed_form(domain, expr, lo, hi)
    }

    pub fn constant(domain: &Domain, value: f64) -> Result<Self> {
        Self::closed_form(domain, FieldExpr::Const(value), value, value)
    }

    /// Simple coefficient from disjoint half-open boxes covering the domain.
    pub fn simple(domain: &Domain, blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Coefficient("simple coefficient needs at least one block".into()));
        }
        for (i, a) in blocks.iter().enumerate() {
            if a.cell.dim() != domain.dim() {
                return Err(Error::Coefficient(format!("block {i} has the wrong dimension")));
            }
            for b in &blocks[i + 1..] {
                if a.cell.overlaps_open(&b.cell) {
                    return Err(Error::Coefficient("blocks overlap".into()));
                }
            }
        }
        let covered: f64 = blocks
            .iter()
            .map(|b| intersection_measure(&b.cell, domain))
            .sum();
        if (covered - domain.measure()).abs() > 1e-9 * domain.measure() {
            return Err(Error::Coefficient(format!(
                "blocks cover measure {covered}, domain has {}",
                domain.measure()
            )));
        }
        let h_min = blocks.iter().map(|b| b.value).fold(f64::INFINITY, f64::min);
        let h_max = blocks.iter().map(|b| b.value).fold(f64::NEG_INFINITY, f64::max);
        check_bounds(h_min, h_max)?;
        Ok(Coefficient { domain: domain.clone(), kind: CoefficientKind::Simple(blocks), h_min, h_max })
    }

    /// Piecewise constant along `x₁`: `values[i]` on `[cuts[i-1], cuts[i])`.
    pub fn strips(domain: &Domain, cuts: &[f64], values: &[f64]) -> Result<Self> {
        if values.len() != cuts.len() + 1 {
            return Err(Error::Coefficient("need one more value than cut points".into()));
        }
        let mut edges = vec![domain.lower()[0]];
        edges.extend_from_slice(cuts);
        edges.push(domain.upper()[0]);
        if edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Coefficient("cut points must increase inside the domain".into()));
        }
        let blocks = edges
            .windows(2)
            .zip(values)
            .map(|(w, &value)| {
                let mut lo = domain.lower().to_vec();
                let mut hi = domain.upper().to_vec();
                lo[0] = w[0];
                hi[0] = w[1];
                Ok(Block { cell: Domain::new(lo, hi)?, value })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::simple(domain, blocks)
    }

    /// Alternating values on `cells` equal cells per axis.
    pub fn checkerboard(domain: &Domain, v1: f64, v2: f64, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::Coefficient("checkerboard needs at least one cell".into()));
        }
        let d = domain.dim();
        let total = cells.pow(d as u32);
        let mut blocks = Vec::with_capacity(total);
        for idx in 0..total {
            let mut rest = idx;
            let mut parity = 0;
            let mut lo = vec![0.0; d];
            let mut hi = vec![0.0; d];
            for a in 0..d {
                let k = rest % cells;
                rest /= cells;
                parity += k;
                let h = domain.side(a) / cells as f64;
                lo[a] = domain.lower()[a] + h * k as f64;
                hi[a] = if k + 1 == cells { domain.upper()[a] } else { domain.lower()[a] + h * (k + 1) as f64 };
            }
            let value = if parity % 2 == 0 { v1 } else { v2 };
            blocks.push(Block { cell: Domain::new(lo, hi)?, value });
        }
        Self::simple(domain, blocks)
    }

    /// Wraps nodal samples as a sampled coefficient; bounds come from the
    /// samples at nodes inside the open domain.
    pub fn sampled(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        let inside: Vec<f64> = (0..grid.len()).filter(|&i| grid.is_interior(i)).map(|i| values[i]).collect();
        let h_min = inside.iter().copied().fold(f64::INFINITY, f64::min);
        let h_max = inside.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        check_bounds(h_min, h_max)?;
        Ok(Coefficient {
            domain: grid.domain().clone(),
            kind: CoefficientKind::Sampled(Samples::from_grid(grid, values)),
            h_min,
            h_max,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn kind(&self) -> &CoefficientKind {
        &self.kind
    }

    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn blocks(&self) -> Option<&[Block]> {
        match &self.kind {
            CoefficientKind::Simple(b) => Some(b),
            _ => None,
        }
    }

    pub fn is_continuous(&self) -> bool {
        match &self.kind {
            CoefficientKind::ClosedForm(e) => e.is_continuous(),
            CoefficientKind::Simple(b) => {
                let first = b[0].value;
                b.iter().all(|blk| blk.value == first)
            }
            CoefficientKind::Sampled(_) => true,
        }
    }

    /// `h(x)`; zero outside the open domain.
    pub fn eval(&self, x: &[f64]) -> f64 {
        if !self.domain.contains_open(x) {
            return 0.0;
        }
        self.eval_unclamped(x)
    }

    /// Value from inside for points of the closed domain (boundary points take
    /// the limit from the interior); zero elsewhere. Used by node quadrature,
    /// where the boundary is a null set.
    pub fn eval_closure(&self, x: &[f64]) -> f64 {
        if !self.domain.contains_closed(x) {
            return 0.0;
        }
        match &self.kind {
            CoefficientKind::Simple(blocks) => {
                if let Some(v) = blocks.iter().find(|b| b.contains_half_open(x)).map(|b| b.value) {
                    return v;
                }
                blocks
                    .iter()
                    .find(|b| b.cell.contains_closed(x))
                    .map(|b| b.value)
                    .unwrap_or(0.0)
            }
            _ => self.eval_unclamped(x),
        }
    }

    fn eval_unclamped(&self, x: &[f64]) -> f64 {
        match &self.kind {
            CoefficientKind::ClosedForm(e) => e.eval(x),
            CoefficientKind::Simple(blocks) => {
                blocks.iter().find(|b| b.contains_half_open(x)).map(|b| b.value).unwrap_or(0.0)
            }
            CoefficientKind::Sampled(s) => s.interpolate(x),
        }
    }

    /// `H(x1, x2) = (h(x1) + h(x2)) / 2`.
    pub fn midpoint(&self, x1: &[f64], x2: &[f64]) -> f64 {
        0.5 * (self.eval(x1) + self.eval(x2))
    }

    /// Values at every grid node, using the closure convention on the boundary.
    pub fn nodal_values(&self, grid: &Grid) -> Vec<f64> {
        (0..grid.len())
            .map(|i| self.eval_closure(&grid.snapped_node(i, &self.domain)))
            .collect()
    }

    /// Coordinates along `axis` where the coefficient may jump (box faces and
    /// domain faces).
    pub fn breakpoints(&self, axis: usize) -> Vec<f64> {
        let mut b = vec![self.domain.lower()[axis], self.domain.upper()[axis]];
        match &self.kind {
            CoefficientKind::Simple(blocks) => {
                for blk in blocks {
                    b.push(blk.cell.lower()[axis]);
                    b.push(blk.cell.upper()[axis]);
                }
            }
            CoefficientKind::ClosedForm(e) if axis == 0 => b.extend(e.breakpoints()),
            _ => {}
        }
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    fn breakpoints_x1(&self) -> Vec<f64> {
        self.breakpoints(0)
    }

    /// Index of the block whose value `eval_closure` returns at `x`.
    pub fn block_index(&self, x: &[f64]) -> Option<usize> {
        let blocks = self.blocks()?;
        if !self.domain.contains_closed(x) {
            return None;
        }
        blocks
            .iter()
            .position(|b| b.contains_half_open(x))
            .or_else(|| blocks.iter().position(|b| b.cell.contains_closed(x)))
    }

    fn validate_bounds(&self) -> Result<()> {
        let slack = 1e-12 * self.h_max.abs().max(1.0);
        for x in probe_points(&self.domain) {
            let v = self.eval(&x);
            if v < self.h_min - slack || v > self.h_max + slack {
                return Err(Error::Coefficient(format!(
                    "value {v} at {x:?} outside [{}, {}]",
                    self.h_min, self.h_max
                )));
            }
        }
        Ok(())
    }

    /// Lower staircase with `levels` steps between `h_min` and `h_max`, realized
    /// as a simple coefficient on a probe grid of cells. On each cell the level
    /// is taken from the smallest probed value, so the result never exceeds `h`
    /// at the probes.
    pub fn simple_approx(&self, levels: usize) -> Result<Coefficient> {
        if levels == 0 {
            return Err(Error::Coefficient("staircase needs at least one level".into()));
        }
        let cells_per_axis = match self.domain.dim() {
            1 => STAIRCASE_CELLS_1D,
            _ => STAIRCASE_CELLS_2D,
        };
        let range = self.h_max - self.h_min;
        let step = |v: f64| -> f64 {
            if range <= 0.0 {
                return self.h_min;
            }
            let level = ((v - self.h_min) * levels as f64 / range).floor().clamp(0.0, levels as f64);
            self.h_min + level * range / levels as f64
        };
        let d = self.domain.dim();
        let h: Vec<f64> = (0..d).map(|a| self.domain.side(a) / cells_per_axis as f64).collect();
        let edge = |a: usize, k: usize| -> f64 {
            if k == cells_per_axis {
                self.domain.upper()[a]
            } else {
                self.domain.lower()[a] + h[a] * k as f64
            }
        };
        let cell_value = |lo: &[f64], hi: &[f64]| -> f64 {
            let mut m = f64::INFINITY;
            for_each_probe(lo, hi, |x| m = m.min(self.eval_closure(x)));
            step(m)
        };
        let rows = if d == 1 { 1 } else { cells_per_axis };
        let mut blocks = Vec::new();
        for row in 0..rows {
            let (ylo, yhi) = if d == 2 { (edge(1, row), edge(1, row + 1)) } else { (0.0, 0.0) };
            let mut run_start = 0usize;
            let mut run_value = f64::NAN;
            for k in 0..=cells_per_axis {
                let v = if k < cells_per_axis {
                    let (lo, hi) = if d == 2 {
                        (vec![edge(0, k), ylo], vec![edge(0, k + 1), yhi])
                    } else {
                        (vec![edge(0, k)], vec![edge(0, k + 1)])
                    };
                    cell_value(&lo, &hi)
                } else {
                    f64::NAN
                };
                if k == 0 {
                    run_value = v;
                    continue;
                }
                if k == cells_per_axis || v != run_value {
                    let (lo, hi) = if d == 2 {
                        (vec![edge(0, run_start), ylo], vec![edge(0, k), yhi])
                    } else {
                        (vec![edge(0, run_start)], vec![edge(0, k)])
                    };
                    blocks.push(Block { cell: Domain::new(lo, hi)?, value: run_value });
                    run_start = k;
                    run_value = v;
                }
            }
        }
        Coefficient::simple(&self.domain, blocks)
    }
}

const STAIRCASE_CELLS_1D: usize = 4096;
const STAIRCASE_CELLS_2D: usize = 256;

fn for_each_probe<F: FnMut(&[f64])>(lo: &[f64], hi: &[f64], mut f: F) {
    const T: [f64; 3] = [0.0, 0.5, 1.0];
    match lo.len() {
        1 => {
            for t in T {
                f(&[lo[0] + t * (hi[0] - lo[0])]);
            }
        }
        _ => {
            for s in T {
                for t in T {
                    f(&[lo[0] + t * (hi[0] - lo[0]), lo[1] + s * (hi[1] - lo[1])]);
                }
            }
        }
    }
}

fn check_bounds(h_min: f64, h_max: f64) -> Result<()> {
    if !(h_min > 0.0 && h_max >= h_min && h_max.is_finite()) {
        return Err(Error::Coefficient(format!("bounds [{h_min}, {h_max}] violate 0 < h_min <= h_max")));
    }
    Ok(())
}

fn intersection_measure(a: &Domain, b: &Domain) -> f64 {
    (0..a.dim())
        .map(|k| (a.upper()[k].min(b.upper()[k]) - a.lower()[k].max(b.lower()[k])).max(0.0))
        .product()
}

/// Probe set strictly inside the domain: 10⁴ points in 1D, 100 × 100 in 2D.
fn probe_points(domain: &Domain) -> Vec<Vec<f64>> {
    match domain.dim() {
        1 => (0..BOUND_PROBES_1D)
            .map(|k| vec![domain.lower()[0] + domain.side(0) * (k as f64 + 0.5) / BOUND_PROBES_1D as f64])
            .collect(),
        _ => {
            let mut pts = Vec::with_capacity(BOUND_PROBES_2D * BOUND_PROBES_2D);
            for j in 0..BOUND_PROBES_2D {
                for i in 0..BOUND_PROBES_2D {
                    pts.push(vec![
                        domain.lower()[0] + domain.side(0) * (i as f64 + 0.5) / BOUND_PROBES_2D as f64,
                        domain.lower()[1] + domain.side(1) * (j as f64 + 0.5) / BOUND_PROBES_2D as f64,
                    ]);
                }
            }
            pts
        }
    }
}

impl Coefficient {
    /// Parses `const:<v>`, `affine:<a>,<b>` (`a + b x₁`), `simple:<cuts>/<values>`
    /// (strips along `x₁`, e.g. `simple:0.5/2,3`) and
    /// `checkerboard:<v1>,<v2>,<cells>`.
    pub fn parse(domain: &Domain, spec: &str) -> Result<Coefficient> {
        let spec = spec.trim();
        let (tag, body) = spec
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("coefficient {spec:?}: expected <kind>:<params>")))?;
        let nums = |s: &str| -> Result<Vec<f64>> {
            if s.trim().is_empty() {
                return Ok(Vec::new());
            }
            s.split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Config(format!("{spec:?}: {e}"))))
                .collect()
        };
        match tag {
            "simple" => {
                let (cuts, values) = body
                    .split_once('/')
                    .ok_or_else(|| Error::Config(format!("{spec:?}: expected simple:<cuts>/<values>")))?;
                Coefficient::strips(domain, &nums(cuts)?, &nums(values)?)
            }
            "checkerboard" => {
                let v = nums(body)?;
                if v.len() != 3 || v[2] < 1.0 || v[2].fract() != 0.0 {
                    return Err(Error::Config(format!("{spec:?}: expected checkerboard:<v1>,<v2>,<cells>")));
                }
                Coefficient::checkerboard(domain, v[0], v[1], v[2] as usize)
            }
            "const" | "affine" | "quad" | "sin" | "sinprod" => Coefficient::from_expr(domain, FieldExpr::from_str(spec)?),
            other => Err(Error::Config(format!("unknown coefficient kind {other:?}"))),
        }
    }
}

/// Smooth radial bump `exp(-1/(1-|x|²))` on the unit ball, scaled to unit mass,
/// and its dilation `η_r(x) = r^{-N} η(x/r)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mollifier {
    radius: f64,
    dim: usize,
    norm: f64,
}

fn bump(t2: f64) -> f64 {
    if t2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t2)).exp()
    }
}

impl Mollifier {
    pub fn new(radius: f64, dim: usize) -> Result<Mollifier> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Coefficient(format!("mollifier radius {radius} must be positive")));
        }
        let norm = match dim {
            1 => 2.0 * quadrature::adaptive(&|t: f64| bump(t * t), 0.0, 1.0, 1e-15),
            2 => 2.0 * PI * quadrature::adaptive(&|t: f64| bump(t * t) * t, 0.0, 1.0, 1e-15),
            _ => return Err(Error::Coefficient(format!("mollifier dimension {dim} not supported"))),
        };
        Ok(Mollifier { radius, dim, norm })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Unit-scale profile `η`.
    pub fn profile(&self, y: &[f64]) -> f64 {
        bump(y.iter().map(|v| v * v).sum()) / self.norm
    }

    /// `η_r(y)`.
    pub fn eval(&self, y: &[f64]) -> f64 {
        let r = self.radius;
        let scaled: Vec<f64> = y.iter().map(|v| v / r).collect();
        self.profile(&scaled) / r.powi(self.dim as i32)
    }

    /// `∫ η` by radial quadrature.
    pub fn mass(&self) -> f64 {
        match self.dim {
            1 => 2.0 * quadrature::adaptive(&|t: f64| self.profile(&[t]), 0.0, 1.0, 1e-15),
            _ => 2.0 * PI * quadrature::adaptive(&|t: f64| self.profile(&[t, 0.0]) * t, 0.0, 1.0, 1e-15),
        }
    }

    /// `(η_r ∗ g)(x)` by tensor Gauss–Legendre over `[-r, r]^N`, splitting at the
    /// given jump locations along `x₁`, normalized by the discrete mass so that
    /// constants are reproduced to rounding.
    pub fn convolve_at<G: Fn(&[f64]) -> f64>(&self, g: &G, x: &[f64], jumps_x1: &[f64]) -> f64 {
        let r = self.radius;
        let rule = quadrature::gl8();
        match self.dim {
            1 => {
                let mut edges: Vec<f64> = vec![-r, r];
                for &j in jumps_x1 {
                    let y = x[0] - j;
                    if y > -r && y < r {
                        edges.push(y);
                    }
                }
                edges.sort_by(|a, b| a.total_cmp(b));
                let mut num = 0.0;
                let mut den = 0.0;
                for w in edges.windows(2) {
                    let pieces = 16;
                    let h = (w[1] - w[0]) / pieces as f64;
                    for k in 0..pieces {
                        let lo = w[0] + h * k as f64;
                        for (y, wt) in rule.mapped(lo, lo + h) {
                            let e = wt * self.eval(&[y]);
                            num += e * g(&[x[0] - y]);
                            den += e;
                        }
                    }
                }
                num / den
            }
            _ => {
                let pieces = 24;
                let rule4 = GaussLegendre::new(4);
                let h = 2.0 * r / pieces as f64;
                let mut num = 0.0;
                let mut den = 0.0;
                for kb in 0..pieces {
                    let blo = -r + h * kb as f64;
                    for (yb, wb) in rule4.mapped(blo, blo + h) {
                        for ka in 0..pieces {
                            let alo = -r + h * ka as f64;
                            for (ya, wa) in rule4.mapped(alo, alo + h) {
                                let e = wa * wb * self.eval(&[ya, yb]);
                                if e == 0.0 {
                                    continue;
                                }
                                num += e * g(&[x[0] - ya, x[1] - yb]);
                                den += e;
                            }
                        }
                    }
                }
                num / den
            }
        }
    }
}

/// Nodal samples of `η_r ∗ g` on `grid` for an arbitrary integrand.
pub fn mollify_fn<G: Fn(&[f64]) -> f64 + Sync>(g: &G, jumps_x1: &[f64], m: &Mollifier, grid: &Grid) -> Vec<f64> {
    use rayon::prelude::*;
    (0..grid.len())
        .into_par_iter()
        .map(|i| m.convolve_at(g, grid.node(i), jumps_x1))
        .collect()
}

/// `η_r ∗ h` sampled on the grid, with `h` extended by zero outside the domain.
pub fn mollify(h: &Coefficient, m: &Mollifier, grid: &Grid) -> Result<Coefficient> {
    if m.radius() >= grid.collar_width() {
        return Err(Error::Coefficient(format!(
            "mollifier radius {} must be below the collar width {}",
            m.radius(),
            grid.collar_width()
        )));
    }
    let jumps = h.breakpoints_x1();
    let values = mollify_fn(&|x: &[f64]| h.eval(x), &jumps, m, grid);
    Coefficient::sampled(grid, values)
}
