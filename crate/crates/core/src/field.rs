//! Closed-form scalar fields used as coefficients, loads, test fields and
//! integrands.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A scalar expression in the coordinates. One-variable forms act on `x₁`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldExpr {
    Const(f64),
    /// `a + b x₁`
    Affine { a: f64, b: f64 },
    /// `a + b x₁ + c x₁²`
    Quadratic { a: f64, b: f64, c: f64 },
    /// `amp · sin(freq π x₁)`
    Sine { amp: f64, freq: f64 },
    /// `amp · Π_i sin(π x_i)`
    SineProduct { amp: f64 },
    /// Indicator of `lo < x₁ < hi`.
    Indicator { lo: f64, hi: f64 },
}

impl FieldExpr {
    pub fn zero() -> Self {
        FieldExpr::Const(0.0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let x1 = x[0];
        match *self {
            FieldExpr::Const(c) => c,
            FieldExpr::Affine { a, b } => a + b * x1,
            FieldExpr::Quadratic { a, b, c } => a + b * x1 + c * x1 * x1,
            FieldExpr::Sine { amp, freq } => amp * (freq * PI * x1).sin(),
            FieldExpr::SineProduct { amp } => amp * x.iter().map(|v| (PI * v).sin()).product::<f64>(),
            FieldExpr::Indicator { lo, hi } => {
                if x1 > lo && x1 < hi {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Exact gradient; `None` where the expression is not differentiable.
    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let d = x.len();
        let mut g = vec![0.0; d];
        let x1 = x[0];
        match *self {
            FieldExpr::Const(_) => {}
            FieldExpr::Affine { b, .. } => g[0] = b,
            FieldExpr::Quadratic { b, c, .. } => g[0] = b + 2.0 * c * x1,
            FieldExpr::Sine { amp, freq } => g[0] = amp * freq * PI * (freq * PI * x1).cos(),
            FieldExpr::SineProduct { amp } => {
                for (a, ga) in g.iter_mut().enumerate() {
                    let mut prod = amp * PI * (PI * x[a]).cos();
                    for (b, &xb) in x.iter().enumerate() {
                        if b != a {
                            prod *= (PI * xb).sin();
                        }
                    }
                    *ga = prod;
                }
            }
            FieldExpr::Indicator { lo, hi } => {
                if x1 == lo || x1 == hi {
                    return None;
                }
            }
        }
        Some(g)
    }

    /// Coordinates along `x₁` where the expression jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            FieldExpr::Indicator { lo, hi } => vec![lo, hi],
            _ => Vec::new(),
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, FieldExpr::Indicator { .. })
    }
}

fn parse_numbers(body: &str, expected: usize, what: &str) -> Result<Vec<f64>> {
    let vals: std::result::Result<Vec<f64>, _> = body.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let vals = vals.map_err(|e| Error::Config(format!("{what}: {e}")))?;
    if vals.len() != expected {
        return Err(Error::Config(format!("{what}: expected {expected} numbers, got {}", vals.len())));
    }
    Ok(vals)
}

impl FromStr for FieldExpr {
    type Err = Error;

    /// `const:c`, `affine:a,b`, `quad:a,b,c`, `sin:amp,freq`, `sinprod:amp`,
    /// `indicator:lo,hi`, plus the shorthands `x`, `x2`, `sinpi`, `bubble`, `zero`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "zero" => return Ok(FieldExpr::Const(0.0)),
            "x" => return Ok(FieldExpr::Affine { a: 0.0, b: 1.0 }),
            "x2" => return Ok(FieldExpr::Quadratic { a: 0.0, b: 0.0, c: 1.0 }),
            "sinpi" => return Ok(FieldExpr::Sine { amp: 1.0, freq: 1.0 }),
            "bubble" => return Ok(FieldExpr::Quadratic { a: 0.0, b: 0.5, c: -0.5 }),
            _ => {}
        }
        let (tag, body) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("field {s:?}: expected <kind>:<params>")))?;
        match tag {
            "const" => Ok(FieldExpr::Const(parse_numbers(body, 1, s)?[0])),
            "affine" => {
                let v = parse_numbers(body, 2, s)?;
                Ok(FieldExpr::Affine { a: v[0], b: v[1] })
            }
            "quad" => {
                let v = parse_numbers(body, 3, s)?;
                Ok(FieldExpr::Quadratic { a: v[0], b: v[1], c: v[2] })
            }
            "sin" => {
                let v = parse_numbers(body, 2, s)?;
                Ok(FieldExpr::Sine { amp: v[0], freq: v[1] })
            }
            "sinprod" => Ok(FieldExpr::SineProduct { amp: parse_numbers(body, 1, s)?[0] }),
            "indicator" => {
                let v = parse_numbers(body, 2, s)?;
                Ok(FieldExpr::Indicator { lo: v[0], hi: v[1] })
            }
            other => Err(Error::Config(format!("unknown field kind {other:?}"))),
        }
    }
}

impl fmt::Display for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldExpr::Const(c) => write!(f, "const:{c}"),
            FieldExpr::Affine { a, b } => write!(f, "affine:{a},{b}"),
            FieldExpr::Quadratic { a, b, c } => write!(f, "quad:{a},{b},{c}"),
            FieldExpr::Sine { amp, freq } => write!(f, "sin:{amp},{freq}"),
            FieldExpr::SineProduct { amp } => write!(f, "sinprod:{amp}"),
            FieldExpr::Indicator { lo, hi } => write!(f, "indicator:{lo},{hi}"),
        }
    }
}
