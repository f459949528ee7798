//! Nonlocal p-Laplacian energies with heterogeneous midpoint coefficients,
//! volume-constrained solvers, and numerical checks of their local limits.

pub mod coefficient;
pub mod covering;
pub mod domain;
pub mod energy;
pub mod error;
pub mod field;
pub mod kernel;
pub mod lab;
pub mod quadrature;
pub mod solver;
pub mod sparse;

pub use coefficient::{Block, Coefficient, Mollifier};
pub use covering::{build_vitali_cover, partition_error, Cover, CoverPiece};
pub use domain::{Domain, Grid, NodeClass};
pub use energy::{QuadratureScheme, Region, ScalarField};
pub use error::{Error, Result};
pub use field::FieldExpr;
pub use kernel::{Kernel, KernelFamily};
pub use solver::{solve_local, solve_nonlocal, Method, SolveOptions, SolveResult};
