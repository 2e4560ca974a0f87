//! Geometric multigrid for the MAC finite difference discretization of the
//! mixed (displacement-pressure) form of linear elasticity.
//!
//! The crate provides:
//!
//! * [`grid`]: staggered-grid geometry and field containers
//! * [`discretization`]: the assembled and matrix-free saddle-point operator,
//!   a manufactured problem and discrete error norms
//! * [`smoother`]: Jacobi-, mass- and Vanka-based Braess-Sarazin relaxation
//!   with exact or weighted-Jacobi Schur complement solves
//! * [`multigrid`]: staggered transfer operators, two-grid/V/W cycles and
//!   measured convergence factors
//! * [`lfa`]: a local Fourier analysis engine predicting smoothing and
//!   two-grid convergence factors
//! * [`report`]: experiment drivers behind the `macmg` command-line tool
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod discretization;
pub mod grid;
pub mod lfa;
pub mod linalg;
pub mod multigrid;
pub mod report;
pub mod smoother;

use thiserror::Error as ThisError;

/// Errors raised by grid construction, assembly and solver configuration.
#[derive(Debug, ThisError)]
pub enum Error {
    #[error("invalid grid: need at least 2 cells per dimension, got {n}")]
    InvalidGrid { n: usize },
    #[error("grid with {n} cells per dimension cannot be coarsened")]
    NotCoarsenable { n: usize },
    #[error("index ({i}, {j}) outside the family's interior range")]
    IndexOutOfRange { i: usize, j: usize },
    #[error("physical parameters out of range: {what}")]
    InvalidParams { what: String },
    #[error("fields live on different grids ({left} vs {right} cells)")]
    GridMismatch { left: usize, right: usize },
    #[error("finest grid must have 4*2^k cells per dimension, got {n}")]
    InvalidHierarchy { n: usize },
    #[error("factorization failed: {what}")]
    FactorizationFailed { what: &'static str },
    #[error("frequency is singular for this operator")]
    SingularFrequency,
}
