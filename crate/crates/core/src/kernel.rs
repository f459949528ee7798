//! Radial kernels with compact support in `B(0, delta)` and mass `C_N`, where
//! `C_N` is the angular average of `|σ·e|^p` over the unit sphere.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// Indicator of the ball, discontinuous at the horizon.
    Constant,
    /// `(1 - r/δ)₊`.
    Hat,
    /// `(1 - (r/δ)²)₊`.
    TruncatedQuadratic,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 3] = [KernelFamily::Constant, KernelFamily::Hat, KernelFamily::TruncatedQuadratic];

    /// Unscaled profile as a function of `t = r/δ ∈ [0, 1)`.
    fn profile(self, t: f64) -> f64 {
        if !(0.0..1.0).contains(&t) {
            return 0.0;
        }
        match self {
            KernelFamily::Constant => 1.0,
            KernelFamily::Hat => 1.0 - t,
            KernelFamily::TruncatedQuadratic => 1.0 - t * t,
        }
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "constant" => Ok(KernelFamily::Constant),
            "hat" => Ok(KernelFamily::Hat),
            "tquad" => Ok(KernelFamily::TruncatedQuadratic),
            other => Err(Error::Kernel(format!("unknown kernel family {other:?}"))),
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelFamily::Constant => "constant",
            KernelFamily::Hat => "hat",
            KernelFamily::TruncatedQuadratic => "tquad",
        })
    }
}

/// One member `k_δ` of a kernel family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    family: KernelFamily,
    delta: f64,
    p: f64,
    dim: usize,
    c_n: f64,
    scale: f64,
}

impl Kernel {
    pub fn new(family: KernelFamily, delta: f64, p: f64, dim: usize) -> Result<Kernel> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Kernel(format!("horizon {delta} must be positive")));
        }
        let c_n = c_n(dim, p)?;
        let moment = radial_moment(family, dim);
        let scale = c_n / (sphere_measure(dim) * delta.powi(dim as i32) * moment);
        Ok(Kernel { family, delta, p, dim, c_n, scale })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn c_n(&self) -> f64 {
        self.c_n
    }

    /// Value at the origin (the family's amplitude).
    pub fn amplitude(&self) -> f64 {
        self.scale
    }

    /// `k_δ(r)`; zero for `r >= δ`.
    pub fn eval(&self, r: f64) -> f64 {
        self.scale * self.family.profile(r / self.delta)
    }

    /// `∫_{B(0,δ)} k_δ`, equal to `C_N` by construction.
    pub fn mass(&self) -> f64 {
        self.c_n
    }

    /// Factor `κ` such that the energy of a fixed smooth field tends to
    /// `κ ∫ h |∇u|^p` as the horizon shrinks: `κ = C_N · ∫ k_δ = C_N²`.
    /// Equal to one in one dimension.
    pub fn limit_factor(&self) -> f64 {
        self.c_n * self.mass()
    }

    /// `(1/C_N) ∫_{B(0,δ)} k_δ` by adaptive radial quadrature of `eval`.
    pub fn check_normalization(&self) -> f64 {
        let n = self.dim as i32;
        let radial = quadrature::adaptive(&|r: f64| self.eval(r) * r.powi(n - 1), 0.0, self.delta, 1e-13 * self.scale.max(1.0));
        sphere_measure(self.dim) * radial / self.c_n
    }
}

/// `meas(S^{N-1})` for `N ∈ {1, 2, 3}`.
pub fn sphere_measure(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => panic!("dimension {dim} not supported"),
    }
}

/// `∫_0^1 φ(t) t^{N-1} dt` by Gauss–Legendre; the profiles are polynomials of
/// degree at most 3 in `t`, so a 4-point rule is exact.
fn radial_moment(family: KernelFamily, dim: usize) -> f64 {
    let rule = quadrature::GaussLegendre::new(4);
    rule.integrate(|t| family.profile(t) * t.powi(dim as i32 - 1), 0.0, 1.0)
}

/// `C_N = (1/meas(S^{N-1})) ∫_{S^{N-1}} |σ·e|^p dσ` with `e` the first axis.
pub fn c_n(dim: usize, p: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Kernel(format!("exponent p = {p} must exceed 1")));
    }
    match dim {
        1 => Ok(1.0),
        // by symmetry, (2/π) ∫_0^{π/2} cos^p θ dθ
        2 => Ok(2.0 / PI * quadrature::adaptive(&|t: f64| t.cos().powf(p), 0.0, 0.5 * PI, 1e-14)),
        // (1/2) ∫_0^π |cos φ|^p sin φ dφ = ∫_0^{π/2} cos^p φ sin φ dφ
        3 => Ok(quadrature::adaptive(&|t: f64| t.cos().powf(p) * t.sin(), 0.0, 0.5 * PI, 1e-14)),
        _ => Err(Error::Kernel(format!("dimension {dim} not in {{1, 2, 3}}"))),
    }
}

/// Angular average of `|σ·e|^p` for an arbitrary unit vector `e` (length 1, 2 or 3),
/// by adaptive quadrature in polar/spherical coordinates.
pub fn angular_average(p: f64, e: &[f64]) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::Kernel(format!("exponent p = {p} must exceed 1")));
    }
    let norm = e.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::Kernel("reference vector must have unit length".into()));
    }
    match e.len() {
        1 => Ok(e[0].abs().powf(p)),
        2 => {
            let phase = e[1].atan2(e[0]);
            // zeros of σ·e = cos(θ - phase) split the circle into smooth arcs
            let zeros = [phase + 0.5 * PI, phase + 1.5 * PI, phase - 0.5 * PI, phase + 2.5 * PI]
                .map(|z| z.rem_euclid(2.0 * PI));
            let f = |t: f64| (t.cos() * e[0] + t.sin() * e[1]).abs().powf(p);
            Ok(quadrature::adaptive_with_breaks(&f, 0.0, 2.0 * PI, &zeros, 1e-13) / (2.0 * PI))
        }
        3 => {
            let inner = |phi: f64| {
                let (sp, cp) = phi.sin_cos();
                let f = |t: f64| {
                    let dot = sp * t.cos() * e[0] + sp * t.sin() * e[1] + cp * e[2];
                    dot.abs().powf(p)
                };
                quadrature::adaptive(&f, 0.0, 2.0 * PI, 1e-12) * sp
            };
            Ok(quadrature::adaptive(&inner, 0.0, PI, 1e-11) / (4.0 * PI))
        }
        d => Err(Error::Kernel(format!("dimension {d} not in {{1, 2, 3}}"))),
    }
}
