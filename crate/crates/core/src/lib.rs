//! Hybrid quantum-classical dynamics with both sectors in operator form.
//!
//! The crate is organized bottom-up:
//!
//! - [`phasespace`]: classical mechanics as commuting operators on a grid,
//!   Liouville evolution, characteristics, expectations and purity.
//! - [`quantum`]: finite-dimensional density matrices and the von Neumann
//!   equation, plus the bipartite commutator decomposition identity.
//! - [`hybrid`]: hybrid states, the coupled equation of motion for a
//!   measurement Hamiltonian, the three correlated candidate states, and
//!   positivity / purity / entropy diagnostics.
//! - [`scenario`]: the nonselective measurement run and its verdict.
//! - [`cli`]: configuration files, the `hybridlab` entry points and
//!   CSV/JSON output.
//!
//! See the `examples/` directory for one runnable program per capability.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod hybrid;
mod integrate;
pub mod phasespace;
pub mod quantum;
pub mod scenario;

pub use num_complex::Complex64;

/// Tool version written into reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
