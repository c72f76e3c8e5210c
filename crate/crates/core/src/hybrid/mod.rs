//! Hybrid quantum-classical states and their dynamics.
//!
//! A hybrid state is `sum_ij |psi_i><psi_j| (x) W_ij` in the eigenbasis of
//! the measured observable. Because the quantum parts of the Hamiltonian are
//! diagonal in that basis, the equation of motion acts on each classical
//! component `W_ij` separately:
//!
//! ```text
//! dW_ij/dt = (h_i - h_j) W_ij / (i hbar) + (v_i - v_j) V_cm W_ij / (i hbar)
//!          + {H_cm + (v_i + v_j)/2 V_cm, W_ij}
//! ```
//!
//! On the diagonal part `V_cm W_ij` is the pointwise product; on classical
//! dyads it is the symmetrized product `(V_cm W + W V_cm)/2`, the form that
//! keeps the state Hermitian. The bracket annihilates classical dyads.
//!
//! Two representations are provided. [`HybridGridState`] stores every
//! component as a [`ClassicalOperator`](crate::phasespace::ClassicalOperator)
//! and is stepped by [`evolve_hybrid_grid`]. [`HybridDyadState`] is a short
//! list of weighted point dyads, evolved exactly along characteristics by
//! [`evolve_hybrid_dyads`] and used to build the candidate states.

mod candidates;
mod diagnostics;
mod residual;
mod rhs;
mod state;

use serde::Serialize;
use thiserror::Error;

use crate::phasespace::{PhasePoint, PhaseSpaceError, PolynomialObservable};
use crate::quantum::{QuantumError, QuantumOperator};

pub use candidates::{
    advance_candidate, collapse_between_outcomes, collapse_map, evolve_hybrid_dyads, initial_state, make_candidate,
    Candidate, NORMALIZATION_TOL,
};
pub use diagnostics::{
    event_probability, hybrid_purity_defect, min_eigenvalue, outcome_probabilities, reduce_cm, reduce_qm, spectrum,
    von_neumann_entropy, Event, NodeSet, ENTROPY_TOL,
};
pub use residual::{band_limited_projection, residual_norm, residual_norm_of_states};
pub use rhs::{check_time_step, evolve_hybrid_grid, hybrid_rhs, stable_dt};
pub use state::{DyadTerm, HybridDyadState, HybridGridState, HybridOperator, NodeBlocks};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HybridError {
    #[error(transparent)]
    PhaseSpace(#[from] PhaseSpaceError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("amplitudes are not normalized (sum of squares {0})")]
    Unnormalized(f64),
    #[error("term ({i},{j}) is nondiagonal in the classical sector and cannot be evolved")]
    UnsupportedTerm { i: usize, j: usize },
    #[error("state is not Hermitian")]
    NotHermitian,
    #[error("state is not positive (minimum normalized eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("zero state")]
    ZeroState,
    #[error("invalid event: {0}")]
    InvalidEvent(String),
    #[error("{0}")]
    InvalidArgument(String),
}

/// `H = H_qm (x) I + I (x) H_cm + V_qm (x) V_cm` with `H_qm = diag(h)` and
/// `V_qm = diag(v)` in a common eigenbasis, so `[H_qm, V_qm] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HamiltonianSpec {
    h: Vec<f64>,
    v: Vec<f64>,
    h_cm: PolynomialObservable,
    v_cm: PolynomialObservable,
    hbar: f64,
}

impl HamiltonianSpec {
    pub fn new(
        h: Vec<f64>,
        v: Vec<f64>,
        h_cm: PolynomialObservable,
        v_cm: PolynomialObservable,
    ) -> Result<Self, HybridError> {
        if h.is_empty() {
            return Err(HybridError::InvalidArgument("need at least one quantum level".into()));
        }
        if h.len() != v.len() {
            return Err(HybridError::DimensionMismatch { expected: h.len(), found: v.len() });
        }
        if h.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(HybridError::InvalidArgument("eigenvalues must be finite".into()));
        }
        Ok(Self { h, v, h_cm, v_cm, hbar: 1.0 })
    }

    pub fn with_hbar(mut self, hbar: f64) -> Result<Self, HybridError> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(HybridError::InvalidArgument(format!("hbar must be positive, got {hbar}")));
        }
        self.hbar = hbar;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn h_cm(&self) -> &PolynomialObservable {
        &self.h_cm
    }

    pub fn v_cm(&self) -> &PolynomialObservable {
        &self.v_cm
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn quantum_hamiltonian(&self) -> QuantumOperator {
        QuantumOperator::from_diagonal(&self.h)
    }

    pub fn measured_observable(&self) -> QuantumOperator {
        QuantumOperator::from_diagonal(&self.v)
    }

    /// Classical generator of component `(i, j)`: `H_cm + (v_i + v_j)/2 V_cm`.
    pub fn pair_hamiltonian(&self, i: usize, j: usize) -> PolynomialObservable {
        self.h_cm.plus_scaled(&self.v_cm, 0.5 * (self.v[i] + self.v[j]))
    }

    /// Whether `v` couples the sectors at all.
    pub fn is_interacting(&self) -> bool {
        !self.v_cm.is_zero() && self.v.iter().any(|&x| x != 0.0)
    }

    /// `((h_i + v_i V(ket)) - (h_j + v_j V(bra))) / hbar`; the coefficient of a
    /// term rotates as `exp(-i * integral)`.
    pub(crate) fn pair_frequency(&self, i: usize, j: usize, ket: PhasePoint, bra: PhasePoint) -> f64 {
        let ei = self.h[i] + self.v[i] * self.v_cm.eval_at(ket);
        let ej = self.h[j] + self.v[j] * self.v_cm.eval_at(bra);
        (ei - ej) / self.hbar
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<(), HybridError> {
        if dim != self.dim() {
            return Err(HybridError::DimensionMismatch { expected: self.dim(), found: dim });
        }
        Ok(())
    }
}
