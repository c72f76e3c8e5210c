//! Operator form of classical mechanics on a discretized phase space.
//!
//! States and observables are commuting operators over the grid nodes;
//! dynamics is the Liouville equation with the Poisson bracket, mean values
//! follow the trace rule, and purity is idempotency up to the `dq dp` norm.

mod diff;
mod dynamics;
mod grid;
mod operator;
mod polynomial;

use thiserror::Error;

pub use diff::Differentiator;
pub use dynamics::{
    characteristics_evolve, characteristics_on_grid, classical_expectation, liouville_evolve, poisson_bracket,
    purity_defect, Characteristics, Trajectory, CHARACTERISTIC_STEP, RK4_STABILITY_LIMIT,
};
pub(crate) use dynamics::{check_stability, BracketGenerator};
pub use grid::{Boundary, PhasePoint, PhaseSpaceGrid, Scheme};
pub use operator::{ClassicalOperator, Dyad};
pub use polynomial::{Monomial, ParsePolynomialError, PolynomialObservable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhaseSpaceError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("point ({}, {}) lies outside the grid", .0.q, .0.p)]
    OutOfBounds(PhasePoint),
    #[error("node index {0} out of range")]
    NodeOutOfRange(usize),
    #[error("dyad from node {0} to itself; use the diagonal part")]
    DiagonalDyad(usize),
    #[error("expected {expected} grid values, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("operators live on different grids")]
    GridMismatch,
    #[error("generator must be a function of q and p (no dyads)")]
    NondiagonalGenerator,
    #[error("operator is not Hermitian")]
    NotHermitian,
    #[error("state has zero trace")]
    ZeroTrace,
    #[error("zero operator")]
    ZeroOperator,
    #[error("time step {dt} violates the stability bound; use dt <= {suggested_dt:.3e}")]
    Unstable { dt: f64, suggested_dt: f64 },
    #[error("{0}")]
    InvalidArgument(String),
}
