//! Volume-constrained nonlocal solves and the local weighted p-Laplacian
//! reference solver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coefficient::Coefficient;
use crate::domain::Grid;
use crate::energy::{load_vector, objective_gradient, PairOperator, QuadratureScheme, Region, ScalarField};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::quadrature::gl8;
use crate::sparse::{conjugate_gradient, CsrMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Conjugate gradients on the linear system (p = 2 only).
    DirectP2,
    /// Gradient descent with backtracking line search.
    Descent,
}

/// Inner product in which the descent direction is the gradient.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Diagonal lumped mass: direction `−g_i / m_i`.
    Lumped,
    /// The quadratic form of the same kernel and coefficient at `p = 2`:
    /// direction `−A⁻¹ g`, with `A` inverted by conjugate gradients.
    Energy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub method: Method,
    /// Stopping threshold on the max-norm of the objective gradient.
    pub tol_grad: f64,
    pub max_iter: usize,
    pub metric: Metric,
    pub shrink: f64,
    pub slope: f64,
    /// Relative residual target of the conjugate-gradient path.
    pub cg_tol: f64,
    /// Starting values; `None` means zero. Constrained entries are ignored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    /// Seed for the random test fields of the residual check.
    pub check_seed: u64,
}

impl SolveOptions {
    /// Defaults for exponent `p`: conjugate gradients at `tol_grad = 1e-8` when
    /// `p = 2`, descent at `1e-6` otherwise.
    pub fn for_p(p: f64) -> Self {
        let quadratic = p == 2.0;
        SolveOptions {
            method: if quadratic { Method::DirectP2 } else { Method::Descent },
            tol_grad: if quadratic { 1e-8 } else { 1e-6 },
            max_iter: 100_000,
            metric: Metric::Energy,
            shrink: 0.5,
            slope: 1e-4,
            cg_tol: 1e-12,
            initial: None,
            check_seed: 0x5eed,
        }
    }

    pub fn validate(&self, p: f64) -> Result<()> {
        if !(self.tol_grad > 0.0) {
            return Err(Error::Config(format!("tol_grad must be positive, got {}", self.tol_grad)));
        }
        if self.max_iter < 1 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) || !(self.slope > 0.0 && self.slope < 1.0) {
            return Err(Error::Config("line search factors must lie in (0, 1)".into()));
        }
        if self.method == Method::DirectP2 && p != 2.0 {
            return Err(Error::Unsupported(format!("direct_p2 requires p = 2, got {p}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult<'g> {
    pub u: ScalarField<'g>,
    pub iterations: usize,
    pub final_grad_norm: f64,
    pub objective: f64,
    /// Objective after every accepted descent step (starting value first).
    pub history: Vec<f64>,
    /// Largest `|B_h(u, w) − (f, w)| / ‖w‖₁` over the random test fields.
    pub residual_ratio: f64,
}

/// Number of random test fields in the post-solve residual check.
const CHECK_FIELDS: usize = 10;

/// Minimizes `(1/p) B_h(w, w) − ∫ f w` over the discrete `X_0`.
pub fn solve_nonlocal<'g>(
    f: &ScalarField<'_>,
    h: &Coefficient,
    k: &Kernel,
    grid: &'g Grid,
    opts: &SolveOptions,
) -> Result<SolveResult<'g>> {
    let p = k.p();
    if !(p > 1.0) {
        return Err(Error::Kernel(format!("exponent p = {p} must exceed 1")));
    }
    if !std::ptr::eq(f.grid(), grid) {
        return Err(Error::GridMismatch);
    }
    opts.validate(p)?;
    let op = PairOperator::midpoint(grid, h, k, &QuadratureScheme::default(), &Region::OmegaDelta)?;
    let b = load_vector(f);
    let mut u = ScalarField::x0_zeros(grid);
    if let Some(init) = &opts.initial {
        if init.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        u = ScalarField::x0_from_values(grid, init.clone())?;
    }
    let (u, iterations, history) = match opts.method {
        Method::DirectP2 => {
            let (u, it) = solve_linear(&op, &b, u, opts)?;
            (u, it, Vec::new())
        }
        Method::Descent => descend(&op, &b, u, h, k, opts)?,
    };
    let g = objective_gradient(&op, &u, &b);
    let final_grad_norm = max_norm(&g);
    if final_grad_norm > opts.tol_grad {
        return Err(Error::NoConvergence { iterations, grad_norm: final_grad_norm });
    }
    let objective = objective_value(&op, &u, &b);
    let residual_ratio = residual_check(&op, &u, &b, opts.check_seed);
    Ok(SolveResult { u, iterations, final_grad_norm, objective, history, residual_ratio })
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn objective_value(op: &PairOperator, u: &ScalarField<'_>, b: &[f64]) -> f64 {
    let l: f64 = b.iter().zip(u.values()).map(|(bi, ui)| bi * ui).sum();
    op.energy(u.values()) / op.p() - l
}

/// The Hessian of `(1/2) · energy` for `p = 2`, restricted to the free nodes:
/// `A_ii = 2 Σ_j c_ij`, `A_ij = −2 c_ij`.
fn free_matrix(op: &PairOperator, u: &ScalarField<'_>) -> (CsrMatrix, Vec<usize>) {
    let free = u.free_indices();
    let mut slot = vec![usize::MAX; u.values().len()];
    for (s, &i) in free.iter().enumerate() {
        slot[i] = s;
    }
    let rows = free
        .iter()
        .map(|&i| {
            let mut diag = 0.0;
            let mut row = Vec::new();
            for (j, c) in op.row(i) {
                diag += 2.0 * c;
                if slot[j] != usize::MAX {
                    row.push((slot[j], -2.0 * c));
                }
            }
            row.push((slot[i], diag));
            row
        })
        .collect();
    (CsrMatrix::from_rows(rows), free)
}

fn solve_linear<'g>(
    op: &PairOperator,
    b: &[f64],
    mut u: ScalarField<'g>,
    opts: &SolveOptions,
) -> Result<(ScalarField<'g>, usize)> {
    let (a, free) = free_matrix(op, &u);
    let rhs: Vec<f64> = free.iter().map(|&i| b[i]).collect();
    let mut x: Vec<f64> = free.iter().map(|&i| u.value(i)).collect();
    let out = conjugate_gradient(&a, &rhs, &mut x, opts.cg_tol, opts.max_iter);
    for (&i, &v) in free.iter().zip(&x) {
        u.set_free(i, v);
    }
    if !out.converged {
        let g = objective_gradient(op, &u, b);
        return Err(Error::NoConvergence { iterations: out.iterations, grad_norm: max_norm(&g) });
    }
    Ok((u, out.iterations))
}

/// Relative accuracy of the inner solve for energy-metric directions. Any
/// conjugate-gradient iterate started from zero is a descent direction.
const DIRECTION_TOL: f64 = 1e-6;

/// Steepest descent in the chosen metric from the given start. The step is
/// found by Armijo backtracking and doubled after each accepted step.
fn descend<'g>(
    op: &PairOperator,
    b: &[f64],
    mut u: ScalarField<'g>,
    h: &Coefficient,
    k: &Kernel,
    opts: &SolveOptions,
) -> Result<(ScalarField<'g>, usize, Vec<f64>)> {
    let grid = u.grid();
    let mass = grid.full_weights();
    let metric = match opts.metric {
        Metric::Lumped => None,
        Metric::Energy => {
            let k2 = Kernel::new(k.family(), k.delta(), 2.0, k.dim())?;
            let op2 = PairOperator::midpoint(grid, h, &k2, &QuadratureScheme::default(), &Region::OmegaDelta)?;
            Some(free_matrix(&op2, &u))
        }
    };
    let mut inner = Vec::new();
    let mut j = objective_value(op, &u, b);
    let mut history = vec![j];
    let mut step = 1.0;
    for it in 0..opts.max_iter {
        let g = objective_gradient(op, &u, b);
        let gnorm = max_norm(&g);
        if gnorm <= opts.tol_grad {
            return Ok((u, it, history));
        }
        let d: Vec<f64> = match &metric {
            None => g
                .iter()
                .zip(&mass)
                .enumerate()
                .map(|(i, (gi, mi))| if u.is_constrained(i) { 0.0 } else { -gi / mi })
                .collect(),
            Some((a, free)) => {
                let rhs: Vec<f64> = free.iter().map(|&i| -g[i]).collect();
                inner.clear();
                inner.resize(free.len(), 0.0);
                conjugate_gradient(a, &rhs, &mut inner, DIRECTION_TOL, 10 * free.len() + 100);
                let mut d = vec![0.0; g.len()];
                for (&i, &v) in free.iter().zip(&inner) {
                    d[i] = v;
                }
                d
            }
        };
        let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        let load_slope: f64 = b.iter().zip(&d).map(|(a, b)| a * b).sum();
        loop {
            let change = op.energy_change(u.values(), &d, step) / op.p() - step * load_slope;
            if change <= opts.slope * step * slope {
                assert!(change <= 0.0, "descent step increased the objective");
                for (i, di) in d.iter().enumerate() {
                    u.set_free(i, u.value(i) + step * di);
                }
                j += change;
                history.push(j);
                step /= opts.shrink;
                break;
            }
            step *= opts.shrink;
            if step < f64::MIN_POSITIVE {
                return Err(Error::NoConvergence { iterations: it, grad_norm: gnorm });
            }
        }
    }
    let gnorm = max_norm(&objective_gradient(op, &u, b));
    if gnorm <= opts.tol_grad {
        return Ok((u, opts.max_iter, history));
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, grad_norm: gnorm })
}

/// Gradient entries are the variational residuals against nodal hat functions,
/// so `B_h(u, w) − (f, w) = Σ_i g_i w_i`; evaluated here through the form.
fn residual_check(op: &PairOperator, u: &ScalarField<'_>, b: &[f64], seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..CHECK_FIELDS {
        let w: Vec<f64> = (0..b.len())
            .map(|i| if u.is_constrained(i) { 0.0 } else { rng.gen_range(-1.0..1.0) })
            .collect();
        let form = op.form(u.values(), &w);
        let l: f64 = b.iter().zip(&w).map(|(bi, wi)| bi * wi).sum();
        let norm: f64 = w.iter().map(|v| v.abs()).sum();
        if norm > 0.0 {
            worst = worst.max((form - l).abs() / norm);
        }
    }
    worst
}

/// Solves `−div(h |∇u|^{p−2} ∇u) = f` on the domain with zero boundary values.
/// In one dimension any `p > 1` is accepted; in two dimensions only `p = 2`.
pub fn solve_local<'g>(f: &ScalarField<'_>, h: &Coefficient, grid: &'g Grid, p: f64) -> Result<ScalarField<'g>> {
    if !(p > 1.0) {
        return Err(Error::Unsupported(format!("exponent p = {p} must exceed 1")));
    }
    if !std::ptr::eq(f.grid(), grid) {
        return Err(Error::GridMismatch);
    }
    match grid.dim() {
        1 => shoot_1d(f, h, grid, p),
        2 if p == 2.0 => finite_difference_2d(f, h, grid),
        2 => Err(Error::Unsupported(format!("two-dimensional local solve requires p = 2, got {p}"))),
        d => Err(Error::Unsupported(format!("local solve in dimension {d}"))),
    }
}

/// Inverse of `s ↦ |s|^{p−2} s`.
fn inverse_flux(z: f64, p: f64) -> f64 {
    if p == 2.0 {
        z
    } else if z == 0.0 {
        0.0
    } else {
        z.signum() * z.abs().powf(1.0 / (p - 1.0))
    }
}

const SHOOT_TOL: f64 = 1e-10;

/// First-integral method: `h u' |u'|^{p−2} = c − F` with `F' = f`; `u(x)` is
/// the integral of the inverted flux and `c` is bisected until `u` vanishes at
/// the right end.
fn shoot_1d<'g>(f: &ScalarField<'_>, h: &Coefficient, grid: &'g Grid, p: f64) -> Result<ScalarField<'g>> {
    let spacing = grid.spacing()[0];
    let first = grid.boundary_index(0);
    let cells = (grid.domain().side(0) / spacing).round() as usize;
    let rule = gl8();
    let q = rule.nodes.len();
    // antiderivative of the piecewise-linear interpolant of f, at quadrature points
    let mut fq = Vec::with_capacity(cells * q);
    let mut hq = Vec::with_capacity(cells * q);
    let mut wq = Vec::with_capacity(cells * q);
    let mut big_f = 0.0;
    for c in 0..cells {
        let x0 = grid.node(first + c)[0];
        let f0 = f.value(first + c);
        let f1 = f.value(first + c + 1);
        let slope = (f1 - f0) / spacing;
        for (x, w) in rule.mapped(x0, x0 + spacing) {
            let t = x - x0;
            fq.push(big_f + f0 * t + 0.5 * slope * t * t);
            hq.push(h.eval_closure(&[x]));
            wq.push(w);
        }
        big_f += 0.5 * (f0 + f1) * spacing;
    }
    let end_value = |c: f64| -> f64 {
        fq.iter()
            .zip(&hq)
            .zip(&wq)
            .map(|((fv, hv), w)| w * inverse_flux((c - fv) / hv, p))
            .sum()
    };
    let mut lo = fq.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = fq.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut c = 0.5 * (lo + hi);
    if hi > lo {
        for _ in 0..200 {
            c = 0.5 * (lo + hi);
            let e = end_value(c);
            if e.abs() <= SHOOT_TOL {
                break;
            }
            if e > 0.0 {
                hi = c;
            } else {
                lo = c;
            }
            if hi - lo <= 4.0 * f64::EPSILON * c.abs().max(1.0) {
                break;
            }
        }
    }
    let mut values = vec![0.0; grid.len()];
    let mut acc = 0.0;
    for cell in 0..cells {
        let r = cell * q..(cell + 1) * q;
        acc += fq[r.clone()]
            .iter()
            .zip(&hq[r.clone()])
            .zip(&wq[r])
            .map(|((fv, hv), w)| w * inverse_flux((c - fv) / hv, p))
            .sum::<f64>();
        values[first + cell + 1] = acc;
    }
    ScalarField::x0_from_values(grid, values)
}

/// Five-point scheme with edge coefficients `(h_i + h_j)/2`, solved by
/// conjugate gradients on the interior nodes.
fn finite_difference_2d<'g>(f: &ScalarField<'_>, h: &Coefficient, grid: &'g Grid) -> Result<ScalarField<'g>> {
    let hv = h.nodal_values(grid);
    let mut u = ScalarField::x0_zeros(grid);
    let free = u.free_indices();
    let mut slot = vec![usize::MAX; grid.len()];
    for (s, &i) in free.iter().enumerate() {
        slot[i] = s;
    }
    let rows = free
        .iter()
        .map(|&i| {
            let mut row = Vec::with_capacity(5);
            let mut diag = 0.0;
            for a in 0..2 {
                let h2 = grid.spacing()[a].powi(2);
                for s in [-1i64, 1] {
                    let mut m = [0i64; 2];
                    m[a] = s;
                    let j = grid.shifted(i, &m).expect("interior node has all neighbors");
                    let e = 0.5 * (hv[i] + hv[j]) / h2;
                    diag += e;
                    if slot[j] != usize::MAX {
                        row.push((slot[j], -e));
                    }
                }
            }
            row.push((slot[i], diag));
            row
        })
        .collect();
    let a = CsrMatrix::from_rows(rows);
    let rhs: Vec<f64> = free.iter().map(|&i| f.value(i)).collect();
    let mut x = vec![0.0; free.len()];
    let out = conjugate_gradient(&a, &rhs, &mut x, 1e-12, 10 * free.len() + 100);
    if !out.converged {
        return Err(Error::NoConvergence { iterations: out.iterations, grad_norm: out.residual_norm });
    }
    for (&i, &v) in free.iter().zip(&x) {
        u.set_free(i, v);
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;
    use crate::kernel::KernelFamily;

    fn unit_grid(n: usize, delta: f64) -> Grid {
        Grid::build(&Domain::unit(1).unwrap(), &[n], delta).unwrap()
    }

    fn p3_profile(x: f64) -> f64 {
        (2.0 / 3.0) * (0.5f64.powf(1.5) - (0.5 - x).abs().powf(1.5))
    }

    #[test]
    fn local_p2_matches_parabola() {
        let grid = unit_grid(1000, 0.01);
        let h = Coefficient::constant(grid.domain(), 1.0).unwrap();
        let f = ScalarField::from_fn(&grid, |_| 1.0);
        let u = solve_local(&f, &h, &grid, 2.0).unwrap();
        for i in 0..grid.len() {
            let x = grid.node(i)[0];
            let exact = if grid.is_interior(i) { x * (1.0 - x) / 2.0 } else { 0.0 };
            assert!((u.value(i) - exact).abs() <= 1e-6, "x = {x}");
        }
    }

    #[test]
    fn local_p3_matches_first_integral_profile() {
        let grid = unit_grid(1000, 0.01);
        let h = Coefficient::constant(grid.domain(), 1.0).unwrap();
        let f = ScalarField::from_fn(&grid, |_| 1.0);
        let u = solve_local(&f, &h, &grid, 3.0).unwrap();
        let peak = u.values().iter().copied().fold(0.0, f64::max);
        assert!((peak - 0.2357).abs() < 1e-4, "peak {peak}");
        for i in 0..grid.len() {
            let x = grid.node(i)[0];
            if grid.domain().contains_open(&[x]) {
                assert!((u.value(i) - p3_profile(x)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn local_zero_load_gives_zero() {
        let grid = unit_grid(200, 0.05);
        let h = Coefficient::constant(grid.domain(), 2.0).unwrap();
        let f = ScalarField::from_fn(&grid, |_| 0.0);
        for p in [1.5, 2.0, 3.0] {
            let u = solve_local(&f, &h, &grid, p).unwrap();
            assert!(u.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn local_variable_coefficient_flux() {
        // -(h u')' = 1 with h = 1 + x: u' = (c - x)/(1 + x), u(0) = u(1) = 0
        let grid = unit_grid(800, 0.05);
        let h = Coefficient::parse(grid.domain(), "affine:1,1").unwrap();
        let f = ScalarField::from_fn(&grid, |_| 1.0);
        let u = solve_local(&f, &h, &grid, 2.0).unwrap();
        // ∫₀¹ (c − x)/(1 + x) dx = (c + 1) ln 2 − 1 = 0
        let c = 1.0 / std::f64::consts::LN_2 - 1.0;
        let exact = |x: f64| (c + 1.0) * (1.0 + x).ln() - x;
        for i in 0..grid.len() {
            let x = grid.node(i)[0];
            if grid.is_interior(i) {
                assert!((u.value(i) - exact(x)).abs() < 1e-8, "x = {x}");
            }
        }
    }

    #[test]
    fn local_2d_rejects_p3_and_solves_p2() {
        let d = Domain::unit(2).unwrap();
        let grid = Grid::build(&d, &[41, 41], 0.05).unwrap();
        let h = Coefficient::constant(&d, 1.0).unwrap();
        let f = ScalarField::from_fn(&grid, |x| 2.0 * std::f64::consts::PI.powi(2) * (std::f64::consts::PI * x[0]).sin() * (std::f64::consts::PI * x[1]).sin());
        assert!(matches!(solve_local(&f, &h, &grid, 3.0), Err(Error::Unsupported(_))));
        let u = solve_local(&f, &h, &grid, 2.0).unwrap();
        let err = (0..grid.len())
            .filter(|&i| grid.is_interior(i))
            .map(|i| {
                let x = grid.node(i);
                (u.value(i) - (std::f64::consts::PI * x[0]).sin() * (std::f64::consts::PI * x[1]).sin()).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 2e-3, "max error {err}");
    }

    fn l2_error(u: &ScalarField<'_>, exact: impl Fn(f64) -> f64) -> f64 {
        let w = Region::Omega.weights(u.grid());
        (0..u.grid().len())
            .map(|i| w[i] * (u.value(i) - exact(u.grid().node(i)[0])).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn nonlocal_zero_load_is_immediate() {
        let grid = unit_grid(200, 0.1);
        let h = Coefficient::constant(grid.domain(), 1.0).unwrap();
        let f = ScalarField::from_fn(&grid, |_| 0.0);
        for p in [2.0, 3.0] {
            let k = Kernel::new(KernelFamily::Constant, 0.1, p, 1).unwrap();
            let r = solve_nonlocal(&f, &h, &k, &grid, &SolveOptions::for_p(p)).unwrap();
            assert!(r.iterations <= 1);
            assert!(r.u.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn nonlocal_p2_approaches_parabola() {
        let h_of = |g: &Grid| Coefficient::constant(g.domain(), 1.0).unwrap();
        let mut errs = Vec::new();
        for delta in [0.1, 0.05] {
            let grid = unit_grid(400, delta);
            let f = ScalarField::from_fn(&grid, |_| 1.0);
            let k = Kernel::new(KernelFamily::Constant, delta, 2.0, 1).unwrap();
            let r = solve_nonlocal(&f, &h_of(&grid), &k, &grid, &SolveOptions::for_p(2.0)).unwrap();
            assert!(r.final_grad_norm <= 1e-8);
            assert!(r.residual_ratio <= 1e-7);
            for i in 0..grid.len() {
                if r.u.is_constrained(i) {
                    assert_eq!(r.u.value(i), 0.0);
                }
            }
            errs.push(l2_error(&r.u, |x| if (0.0..=1.0).contains(&x) { x * (1.0 - x) / 2.0 } else { 0.0 }));
        }
        assert!(errs[1] < errs[0], "{errs:?}");
        assert!(errs[1] < 2e-2);
    }

    #[test]
    fn nonlocal_p2_symmetric_load_gives_symmetric_solution() {
        let grid = unit_grid(300, 0.1);
        let h = Coefficient::parse(grid.domain(), "quad:1,1,-1").unwrap();
        let f = ScalarField::from_fn(&grid, |x| 1.0 + (std::f64::consts::PI * x[0]).sin());
        let k = Kernel::new(KernelFamily::Hat, 0.1, 2.0, 1).unwrap();
        let r = solve_nonlocal(&f, &h, &k, &grid, &SolveOptions::for_p(2.0)).unwrap();
        let n = grid.len();
        for i in 0..n {
            assert!((r.u.value(i) - r.u.value(n - 1 - i)).abs() <= 1e-10);
        }
    }

    #[test]
    fn nonlocal_p2_unique_from_two_starts() {
        let grid = unit_grid(300, 0.1);
        let h = Coefficient::parse(grid.domain(), "affine:1,1").unwrap();
        let f = ScalarField::from_fn(&grid, |x| 1.0 + x[0]);
        let k = Kernel::new(KernelFamily::Constant, 0.1, 2.0, 1).unwrap();
        let a = solve_nonlocal(&f, &h, &k, &grid, &SolveOptions::for_p(2.0)).unwrap();
        let mut opts = SolveOptions::for_p(2.0);
        opts.initial = Some((0..grid.len()).map(|i| (7.0 * grid.node(i)[0]).cos()).collect());
        let b = solve_nonlocal(&f, &h, &k, &grid, &opts).unwrap();
        let diff = a.u.values().iter().zip(b.u.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-8, "{diff}");
    }

    #[test]
    fn descent_on_p2_agrees_with_direct_solve() {
        let grid = unit_grid(40, 0.1);
        let h = Coefficient::constant(grid.domain(), 1.0).unwrap();
        let f = ScalarField::from_fn(&grid, |_| 1.0);
        let k = Kernel::new(KernelFamily::Hat, 0.1, 2.0, 1).unwrap();
        let direct = solve_nonlocal(&f, &h, &k, &grid, &SolveOptions::for_p(2.0)).unwrap();
        for metric in [Metric::Lumped, Metric::Energy] {
            let mut opts = SolveOptions::for_p(2.0);
            opts.method = Method::Descent;
            opts.metric = metric;
            let desc = solve_nonlocal(&f, &h, &k, &grid, &opts).unwrap();
            assert!(desc.history.windows(2).all(|w| w[1] <= w[0]));
            let diff = direct.u.values().iter().zip(desc.u.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(diff < 1e-5, "{metric:?}: {diff}");
            assert!((direct.objective - desc.objective).abs() < 1e-10);
        }
    }

    #[test]
    fn descent_p3_residuals_are_small() {
        let grid = unit_grid(100, 0.1);
        let h = Coefficient::constant(grid.domain(), 1.0).unwrap();
        let f = ScalarField::from_fn(&grid, |_| 1.0);
        let k = Kernel::new(KernelFamily::Constant, 0.1, 3.0, 1).unwrap();
        let opts = SolveOptions::for_p(3.0);
        let r = solve_nonlocal(&f, &h, &k, &grid, &opts).unwrap();
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.residual_ratio <= 10.0 * opts.tol_grad);
        assert!(r.objective < 0.0);
    }

    #[test]
    fn rejects_bad_options() {
        let grid = unit_grid(50, 0.1);
        let h = Coefficient::constant(grid.domain(), 1.0).unwrap();
        let f = ScalarField::from_fn(&grid, |_| 1.0);
        let k = Kernel::new(KernelFamily::Constant, 0.1, 3.0, 1).unwrap();
        let mut opts = SolveOptions::for_p(3.0);
        opts.method = Method::DirectP2;
        assert!(solve_nonlocal(&f, &h, &k, &grid, &opts).is_err());
        let mut opts = SolveOptions::for_p(3.0);
        opts.tol_grad = 0.0;
        assert!(solve_nonlocal(&f, &h, &k, &grid, &opts).is_err());
        let mut opts = SolveOptions::for_p(3.0);
        opts.max_iter = 2;
        assert!(matches!(solve_nonlocal(&f, &h, &k, &grid, &opts), Err(Error::NoConvergence { .. })));
    }
}
