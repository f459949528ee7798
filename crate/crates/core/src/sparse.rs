//! Compressed-row matrices and unpreconditioned conjugate gradients.

use rayon::prelude::*;

#[derive(Clone, Debug, Default)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from per-row entry lists (columns need not be sorted;
    /// duplicates are summed).
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            let mut last: Option<usize> = None;
            for (j, v) in row {
                if last == Some(j) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(j);
                    vals.push(v);
                    last = Some(j);
                }
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .position(|&c| c == j)
            .map(|k| self.vals[r.start + k])
            .unwrap_or(0.0)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().with_min_len(256).for_each(|(i, yi)| {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            *yi = self.cols[r.clone()].iter().zip(&self.vals[r]).map(|(&j, v)| v * x[j]).sum();
        });
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            self.cols[r.clone()]
                .iter()
                .zip(&self.vals[r])
                .all(|(&j, &v)| (self.get(j, i) - v).abs() <= tol * v.abs().max(1.0))
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub iterations: usize,
    pub residual_norm: f64,
    pub converged: bool,
}

/// Solves `A x = b` for symmetric positive definite `A`, starting from the
/// contents of `x`, until `‖r‖ ≤ rel_tol · ‖b‖`.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize) -> CgOutcome {
    let n = a.n();
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let b_norm = dot(b, b).sqrt();
    let target = rel_tol * b_norm.max(f64::MIN_POSITIVE);
    let mut rr = dot(&r, &r);
    if rr.sqrt() <= target || b_norm == 0.0 && rr == 0.0 {
        return CgOutcome { iterations: 0, residual_norm: rr.sqrt(), converged: true };
    }
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return CgOutcome { iterations: it, residual_norm: rr.sqrt(), converged: false };
        }
        let alpha = rr / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= target {
            return CgOutcome { iterations: it, residual_norm: rr_new.sqrt(), converged: true };
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
    }
    CgOutcome { iterations: max_iter, residual_norm: rr.sqrt(), converged: false }
}
