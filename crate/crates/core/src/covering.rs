//! Disjoint covers of a box by scaled copies of itself on which a continuous
//! function oscillates by at most `1/k`, and the partition estimate
//! `∫ f ξ ≈ Σ_i f(a_i) ∫_{piece_i} ξ`.

use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::quadrature::{adaptive_with_breaks, gl10};

/// The open box `a + eps·(Ω − c)`, a copy of `Ω` scaled by `eps` and centered
/// at `a` (`c` is the center of `Ω`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverPiece {
    pub center: Vec<f64>,
    pub eps: f64,
}

impl CoverPiece {
    pub fn cell(&self, domain: &Domain) -> Domain {
        let c = domain.center();
        let lower = (0..domain.dim())
            .map(|a| self.center[a] + self.eps * (domain.lower()[a] - c[a]))
            .collect();
        let upper = (0..domain.dim())
            .map(|a| self.center[a] + self.eps * (domain.upper()[a] - c[a]))
            .collect();
        Domain::new(lower, upper).expect("scaled copy of a valid box")
    }

    pub fn measure(&self, domain: &Domain) -> f64 {
        self.eps.powi(domain.dim() as i32) * domain.measure()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cover {
    pub domain: Domain,
    pub pieces: Vec<CoverPiece>,
    pub k: usize,
    pub residual_measure: f64,
    /// Uncovered measure after each subdivision depth, starting at depth 0.
    pub residual_history: Vec<f64>,
}

/// Deepest subdivision level before giving up.
pub const MAX_DEPTH: usize = 40;
/// Safety factor applied to the probed oscillation.
const OSC_SAFETY: f64 = 1.1;

fn probes_per_axis(dim: usize) -> usize {
    if dim == 1 {
        9
    } else {
        5
    }
}

/// Oscillation of `f` over the closed cell, estimated on a probe lattice.
fn probe_oscillation<F: Fn(&[f64]) -> f64>(f: &F, cell: &Domain) -> f64 {
    let dim = cell.dim();
    let m = probes_per_axis(dim);
    let total = m.pow(dim as u32);
    let mut x = vec![0.0; dim];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for idx in 0..total {
        let mut rest = idx;
        for a in 0..dim {
            let t = (rest % m) as f64 / (m - 1) as f64;
            rest /= m;
            x[a] = cell.lower()[a] + t * cell.side(a);
        }
        let v = f(&x);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi - lo
}

impl Cover {
    pub fn covered_measure(&self) -> f64 {
        self.pieces.iter().map(|p| p.measure(&self.domain)).sum()
    }

    /// Exact pairwise test on the open boxes.
    pub fn is_disjoint(&self) -> bool {
        let mut cells: Vec<Domain> = self.pieces.iter().map(|p| p.cell(&self.domain)).collect();
        cells.sort_by(|a, b| a.lower()[0].total_cmp(&b.lower()[0]));
        for (i, a) in cells.iter().enumerate() {
            for b in &cells[i + 1..] {
                if b.lower()[0] >= a.upper()[0] {
                    break;
                }
                if a.overlaps_open(b) {
                    return false;
                }
            }
        }
        true
    }

    /// Largest probed oscillation of `f` over any piece.
    pub fn max_oscillation<F: Fn(&[f64]) -> f64>(&self, f: &F) -> f64 {
        self.pieces
            .iter()
            .map(|p| probe_oscillation(f, &p.cell(&self.domain)))
            .fold(0.0, f64::max)
    }
}

/// Dyadic construction: cells of depth `d` are the copies of `Ω` scaled by
/// `2^{-d}` that tile it. A cell is kept once the probed oscillation of `f`,
/// inflated by a safety factor, is at most `1/k`; otherwise it is split into
/// `2^N` children. Stops as soon as the uncovered measure is at most
/// `residual_tol`.
pub fn build_vitali_cover<F: Fn(&[f64]) -> f64>(domain: &Domain, f: &F, k: usize, residual_tol: f64) -> Result<Cover> {
    if k < 1 {
        return Err(Error::Covering("oscillation parameter k must be at least 1".into()));
    }
    if !(residual_tol > 0.0) {
        return Err(Error::Covering(format!("residual tolerance {residual_tol} must be positive")));
    }
    let dim = domain.dim();
    let bound = 1.0 / k as f64;
    let full = domain.measure();
    let mut pieces = Vec::new();
    let mut pending = vec![CoverPiece { center: domain.center(), eps: 1.0 }];
    let mut history = Vec::new();
    for _ in 0..=MAX_DEPTH {
        let mut next = Vec::new();
        for piece in pending {
            let cell = piece.cell(domain);
            if OSC_SAFETY * probe_oscillation(f, &cell) <= bound {
                pieces.push(piece);
            } else {
                let child_eps = 0.5 * piece.eps;
                for corner in 0..(1usize << dim) {
                    let center = (0..dim)
                        .map(|a| {
                            let sign = if corner >> a & 1 == 1 { 0.25 } else { -0.25 };
                            piece.center[a] + sign * cell.side(a)
                        })
                        .collect();
                    next.push(CoverPiece { center, eps: child_eps });
                }
            }
        }
        let residual = if next.is_empty() {
            0.0
        } else {
            next.iter().map(|p| p.measure(domain)).sum::<f64>()
        };
        history.push(residual);
        pending = next;
        if residual <= residual_tol {
            return Ok(Cover {
                domain: domain.clone(),
                pieces,
                k,
                residual_measure: residual,
                residual_history: history,
            });
        }
    }
    Err(Error::Covering(format!(
        "uncovered measure {} above {residual_tol} after {MAX_DEPTH} subdivisions",
        history.last().copied().unwrap_or(full)
    )))
}

/// Integral of `g` over a box: adaptive Gauss–Legendre in one dimension,
/// tensor Gauss–Legendre split at the `x₁` breakpoints in two.
pub fn box_integral<G: Fn(&[f64]) -> f64>(g: &G, cell: &Domain, breaks_x1: &[f64]) -> f64 {
    let (a, b) = (cell.lower()[0], cell.upper()[0]);
    match cell.dim() {
        1 => adaptive_with_breaks(&|x| g(&[x]), a, b, breaks_x1, 1e-13),
        _ => {
            let rule = gl10();
            let (c, d) = (cell.lower()[1], cell.upper()[1]);
            let mut cuts = vec![a];
            cuts.extend(breaks_x1.iter().copied().filter(|&t| t > a && t < b));
            cuts.push(b);
            let mut acc = 0.0;
            for w in cuts.windows(2) {
                for (x, wx) in rule.mapped(w[0], w[1]) {
                    let inner: f64 = rule.mapped(c, d).map(|(y, wy)| wy * g(&[x, y])).sum();
                    acc += wx * inner;
                }
            }
            acc
        }
    }
}

/// `|∫_Ω f ξ − Σ_i f(a_i) ∫_{piece_i} ξ|`, where `breaks_x1` lists the
/// coordinates along `x₁` at which `f` or `ξ` may jump.
pub fn partition_error<F, X>(cover: &Cover, f: &F, xi: &X, breaks_x1: &[f64]) -> f64
where
    F: Fn(&[f64]) -> f64,
    X: Fn(&[f64]) -> f64,
{
    let total = box_integral(&|x: &[f64]| f(x) * xi(x), &cover.domain, breaks_x1);
    let partition: f64 = cover
        .pieces
        .iter()
        .map(|p| f(&p.center) * box_integral(xi, &p.cell(&cover.domain), breaks_x1))
        .sum();
    (total - partition).abs()
}

/// The right-hand side of the partition estimate:
/// `(1/k)‖ξ‖_{L¹} + sup|f| sup|ξ| · residual`.
pub fn partition_bound(cover: &Cover, xi_l1: f64, f_sup: f64, xi_sup: f64) -> f64 {
    xi_l1 / cover.k as f64 + f_sup * xi_sup * cover.residual_measure
}
