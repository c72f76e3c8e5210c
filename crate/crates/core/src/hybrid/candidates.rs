use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{DyadTerm, HamiltonianSpec, HybridDyadState, HybridError};
use crate::phasespace::{Characteristics, PhasePoint, PhaseSpaceGrid, PolynomialObservable};

/// Tolerance on `sum |c_i|^2 = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// The three candidate states for the measurement problem. They share the
/// diagonal terms and differ in the `i != j` terms. Output files label them
/// `seven`, `eight` and `nine`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Candidate {
    /// Pure coherent mixture: the ket of every term follows branch `i`, the
    /// bra follows branch `j`.
    #[serde(rename = "seven")]
    Coherent,
    /// Linear evolution of the initial product: the `(i, j)` term sits at a
    /// single point moving under the averaged eigenvalue `(v_i + v_j)/2`.
    #[serde(rename = "eight")]
    Linear,
    /// Noncoherent mixture `sum_i |c_i|^2 |psi_i><psi_i| (x) delta_{z_i(t)}`;
    /// coherences survive only inside degenerate eigenvalue blocks.
    #[serde(rename = "nine")]
    Collapsed,
}

impl Candidate {
    pub const ALL: [Candidate; 3] = [Candidate::Coherent, Candidate::Linear, Candidate::Collapsed];

    pub fn label(self) -> &'static str {
        match self {
            Candidate::Coherent => "seven",
            Candidate::Linear => "eight",
            Candidate::Collapsed => "nine",
        }
    }

    fn law(self) -> Law {
        match self {
            Candidate::Coherent => Law::Branchwise,
            Candidate::Linear | Candidate::Collapsed => Law::Shared,
        }
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Copy)]
enum Law {
    /// Ket under `H_cm + v_i V_cm`, bra under `H_cm + v_j V_cm`.
    Branchwise,
    /// Ket and bra together under `H_cm + (v_i + v_j)/2 V_cm`.
    Shared,
}

fn trajectory(h: &PolynomialObservable, z0: PhasePoint, t: f64) -> Vec<PhasePoint> {
    let mut points = Vec::new();
    Characteristics::new(h).flow(z0, t, |_, z| points.push(z));
    points
}

/// Moves ket and bra along their characteristics and rotates the coefficient
/// by `exp(-i * integral of pair_frequency)`, trapezoidal in time on the
/// same steps as the transport.
fn propagate(spec: &HamiltonianSpec, term: &DyadTerm, law: Law, t: f64) -> DyadTerm {
    if t == 0.0 {
        return *term;
    }
    let (i, j) = (term.i, term.j);
    let (kets, bras) = match law {
        Law::Shared => {
            let h = spec.pair_hamiltonian(i, j);
            let kets = trajectory(&h, term.ket, t);
            let bras = if term.ket == term.bra { kets.clone() } else { trajectory(&h, term.bra, t) };
            (kets, bras)
        }
        Law::Branchwise => (
            trajectory(&spec.pair_hamiltonian(i, i), term.ket, t),
            trajectory(&spec.pair_hamiltonian(j, j), term.bra, t),
        ),
    };
    let h = t / (kets.len() - 1) as f64;
    let omega: Vec<f64> = kets.iter().zip(&bras).map(|(&k, &b)| spec.pair_frequency(i, j, k, b)).collect();
    let phase: f64 = omega.windows(2).map(|w| 0.5 * (w[0] + w[1]) * h).sum();
    DyadTerm {
        coeff: term.coeff * Complex64::from_polar(1.0, -phase),
        ket: *kets.last().unwrap(),
        bra: *bras.last().unwrap(),
        ..*term
    }
}

fn check_amplitudes(amplitudes: &[Complex64]) -> Result<(), HybridError> {
    let norm: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
    if !((norm - 1.0).abs() <= NORMALIZATION_TOL) {
        return Err(HybridError::Unnormalized(norm));
    }
    Ok(())
}

/// Pure product `|Psi><Psi| (x) delta_{z0}` with `|Psi> = sum_i c_i |psi_i>`.
/// Terms with zero coefficient are omitted.
pub fn initial_state(
    grid: &PhaseSpaceGrid,
    amplitudes: &[Complex64],
    z0: PhasePoint,
) -> Result<HybridDyadState, HybridError> {
    check_amplitudes(amplitudes)?;
    let n = amplitudes.len();
    let terms = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| DyadTerm { i, j, coeff: amplitudes[i] * amplitudes[j].conj(), ket: z0, bra: z0 })
        .filter(|t| t.coeff != Complex64::new(0.0, 0.0))
        .collect();
    HybridDyadState::new(n, *grid, terms)
}

/// Candidate state `kind` at time `t >= 0` for initial amplitudes `c` and
/// pointer position `z0`.
pub fn make_candidate(
    kind: Candidate,
    spec: &HamiltonianSpec,
    grid: &PhaseSpaceGrid,
    amplitudes: &[Complex64],
    z0: PhasePoint,
    t: f64,
) -> Result<HybridDyadState, HybridError> {
    spec.check_dim(amplitudes.len())?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(HybridError::InvalidArgument(format!("time must be nonnegative, got {t}")));
    }
    let mut start = initial_state(grid, amplitudes, z0)?;
    if kind == Candidate::Collapsed {
        start = collapse_between_outcomes(&start, spec);
    }
    advance_candidate(kind, spec, &start, t)
}

/// Moves every term of a candidate state forward (or backward) by `dt` with
/// that candidate's transport law.
pub fn advance_candidate(
    kind: Candidate,
    spec: &HamiltonianSpec,
    state: &HybridDyadState,
    dt: f64,
) -> Result<HybridDyadState, HybridError> {
    spec.check_dim(state.dim())?;
    let law = kind.law();
    let terms = state.terms().iter().map(|t| propagate(spec, t, law, dt)).collect();
    HybridDyadState::new(state.dim(), *state.grid(), terms)
}

/// Exact evolution of a state whose terms are all classically diagonal:
/// each term moves under `H_cm + (v_i + v_j)/2 V_cm` and its coefficient
/// rotates with `-((h_i - h_j) + (v_i - v_j) V_cm(z)) / hbar`.
pub fn evolve_hybrid_dyads(
    spec: &HamiltonianSpec,
    state: &HybridDyadState,
    t: f64,
) -> Result<HybridDyadState, HybridError> {
    spec.check_dim(state.dim())?;
    if let Some(term) = state.terms().iter().find(|t| !t.is_classically_diagonal()) {
        return Err(HybridError::UnsupportedTerm { i: term.i, j: term.j });
    }
    let terms = state.terms().iter().map(|term| propagate(spec, term, Law::Shared, t)).collect();
    HybridDyadState::new(state.dim(), *state.grid(), terms)
}

/// Drops every `i != j` term.
pub fn collapse_map(state: &HybridDyadState) -> HybridDyadState {
    let terms = state.terms().iter().filter(|t| t.i == t.j).copied().collect();
    HybridDyadState::new(state.dim(), *state.grid(), terms).expect("indices already validated")
}

/// Drops the `i != j` terms between distinct eigenvalues of the measured
/// observable and keeps those inside degenerate blocks.
pub fn collapse_between_outcomes(state: &HybridDyadState, spec: &HamiltonianSpec) -> HybridDyadState {
    let v = spec.v();
    let terms = state.terms().iter().filter(|t| v[t.i] == v[t.j]).copied().collect();
    HybridDyadState::new(state.dim(), *state.grid(), terms).expect("indices already validated")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> (HamiltonianSpec, PhaseSpaceGrid, Vec<Complex64>) {
        let spec = HamiltonianSpec::new(
            vec![0.0, 0.0],
            vec![1.0, -1.0],
            PolynomialObservable::zero(),
            PolynomialObservable::position(),
        )
        .unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        (spec, PhaseSpaceGrid::square(4.0, 64).unwrap(), vec![Complex64::new(s, 0.0); 2])
    }

    fn close(a: PhasePoint, b: PhasePoint) -> bool {
        a.distance(&b) < 1e-12
    }

    #[test]
    fn diagonal_term_moves_with_its_eigenvalue() {
        let (spec, g, _) = reference();
        let z0 = PhasePoint::new(0.5, 0.25);
        let state = HybridDyadState::new(
            2,
            g,
            vec![DyadTerm { i: 0, j: 0, coeff: Complex64::new(1.0, 0.0), ket: z0, bra: z0 }],
        )
        .unwrap();
        let out = evolve_hybrid_dyads(&spec, &state, 0.7).unwrap();
        assert!(close(out.terms()[0].ket, PhasePoint::new(0.5, 0.25 - 0.7)));
        assert_eq!(out.terms()[0].coeff, Complex64::new(1.0, 0.0));
        assert_eq!(evolve_hybrid_dyads(&spec, &state, 0.0).unwrap(), state);
    }

    #[test]
    fn coherence_rotates_at_fixed_point() {
        // midpoint eigenvalue 0: point fixed, phase rate -(v1 - v2) q0 / hbar = -2 q0
        let (spec, g, _) = reference();
        let z0 = PhasePoint::new(0.3, 0.0);
        let state = HybridDyadState::new(
            2,
            g,
            vec![DyadTerm { i: 0, j: 1, coeff: Complex64::new(0.5, 0.0), ket: z0, bra: z0 }],
        )
        .unwrap();
        let t = 0.9;
        let out = evolve_hybrid_dyads(&spec, &state, t).unwrap();
        assert!(close(out.terms()[0].ket, z0));
        let expect = Complex64::from_polar(0.5, -2.0 * 0.3 * t);
        assert!((out.terms()[0].coeff - expect).norm() < 1e-12);
    }

    #[test]
    fn dyad_engine_rejects_classical_coherences() {
        let (spec, g, c) = reference();
        let seven = make_candidate(Candidate::Coherent, &spec, &g, &c, PhasePoint::new(0.0, 0.0), 0.5).unwrap();
        assert!(matches!(evolve_hybrid_dyads(&spec, &seven, 0.1), Err(HybridError::UnsupportedTerm { .. })));
    }

    #[test]
    fn candidate_terms_at_unit_time() {
        let (spec, g, c) = reference();
        let z0 = PhasePoint::new(0.0, 0.0);
        let nine = make_candidate(Candidate::Collapsed, &spec, &g, &c, z0, 1.0).unwrap();
        assert_eq!(nine.terms().len(), 2);
        for t in nine.terms() {
            assert_eq!(t.i, t.j);
            assert!((t.coeff.re - 0.5).abs() < 1e-15);
            let p = if t.i == 0 { -1.0 } else { 1.0 };
            assert!(close(t.ket, PhasePoint::new(0.0, p)));
        }
        let eight = make_candidate(Candidate::Linear, &spec, &g, &c, z0, 1.0).unwrap();
        let off: Vec<_> = eight.terms().iter().filter(|t| t.i != t.j).collect();
        assert_eq!(off.len(), 2);
        assert!(off.iter().all(|t| close(t.ket, z0) && close(t.bra, z0)));
        let seven = make_candidate(Candidate::Coherent, &spec, &g, &c, z0, 1.0).unwrap();
        let t01 = seven.terms().iter().find(|t| t.i == 0 && t.j == 1).unwrap();
        assert!(close(t01.ket, PhasePoint::new(0.0, -1.0)) && close(t01.bra, PhasePoint::new(0.0, 1.0)));
    }

    #[test]
    fn candidates_coincide_at_start() {
        let (spec, g, c) = reference();
        let z0 = PhasePoint::new(1.0, -0.5);
        let seven = make_candidate(Candidate::Coherent, &spec, &g, &c, z0, 0.0).unwrap();
        let eight = make_candidate(Candidate::Linear, &spec, &g, &c, z0, 0.0).unwrap();
        let nine = make_candidate(Candidate::Collapsed, &spec, &g, &c, z0, 0.0).unwrap();
        assert_eq!(seven, eight);
        assert_eq!(collapse_map(&seven), nine);
        assert_eq!(collapse_map(&nine), nine);
    }

    #[test]
    fn degenerate_block_keeps_its_coherence() {
        let spec = HamiltonianSpec::new(
            vec![0.0; 3],
            vec![1.0, 1.0, -1.0],
            PolynomialObservable::zero(),
            PolynomialObservable::position(),
        )
        .unwrap();
        let g = PhaseSpaceGrid::square(4.0, 32).unwrap();
        let c = vec![Complex64::new(1.0 / 3f64.sqrt(), 0.0); 3];
        let nine = make_candidate(Candidate::Collapsed, &spec, &g, &c, PhasePoint::new(0.0, 0.0), 1.0).unwrap();
        let mut pairs: Vec<_> = nine.terms().iter().map(|t| (t.i, t.j)).collect();
        pairs.sort();
        assert_eq!(pairs, vec![(0, 0), (0, 1), (1, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn amplitude_validation() {
        let (spec, g, _) = reference();
        let c = vec![Complex64::new(1.0, 0.0); 2];
        let err = make_candidate(Candidate::Linear, &spec, &g, &c, PhasePoint::new(0.0, 0.0), 1.0).unwrap_err();
        assert_eq!(err, HybridError::Unnormalized(2.0));
        let c = vec![Complex64::new(1.0, 0.0)];
        assert!(make_candidate(Candidate::Linear, &spec, &g, &c, PhasePoint::new(0.0, 0.0), 1.0).is_err());
    }
}
