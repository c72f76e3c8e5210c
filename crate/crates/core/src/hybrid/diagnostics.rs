//! Spectral and probabilistic diagnostics of hybrid states.
//!
//! The hybrid operator is block diagonal over groups of classical nodes
//! that are linked by dyads. Each group is solved as a small dense Hermitian
//! matrix; isolated nodes give `N x N` blocks.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{HybridError, HybridOperator, NodeBlocks};
use crate::phasespace::ClassicalOperator;
use crate::quantum::{hermitian_eigenvalues, QuantumOperator};

/// Most negative normalized eigenvalue still accepted as a state.
pub const ENTROPY_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-10;
const PROJECTOR_TOL: f64 = 1e-10;

struct Cluster {
    matrix: DMatrix<Complex64>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn check_hermitian(nb: &NodeBlocks) -> Result<(), HybridError> {
    let scale = nb.blocks.values().flat_map(|m| m.iter().map(|z| z.norm())).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for (&(a, b), m) in &nb.blocks {
        let mirror = nb.blocks.get(&(b, a));
        for i in 0..nb.dim {
            for j in 0..nb.dim {
                let other = mirror.map_or(Complex64::new(0.0, 0.0), |x| x[(j, i)].conj());
                if (m[(i, j)] - other).norm() > HERMITIAN_TOL * scale {
                    return Err(HybridError::NotHermitian);
                }
            }
        }
    }
    Ok(())
}

fn clusters(nb: &NodeBlocks) -> Vec<Cluster> {
    let nodes: BTreeSet<usize> = nb.blocks.keys().flat_map(|&(a, b)| [a, b]).collect();
    let index: BTreeMap<usize, usize> = nodes.iter().enumerate().map(|(k, &n)| (n, k)).collect();
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    for &(a, b) in nb.blocks.keys() {
        let (ra, rb) = (find(&mut parent, index[&a]), find(&mut parent, index[&b]));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&node, &k) in &index {
        let root = find(&mut parent, k);
        groups.entry(root).or_default().push(node);
    }
    let n = nb.dim;
    groups
        .into_values()
        .map(|members| {
            let pos: BTreeMap<usize, usize> = members.iter().enumerate().map(|(k, &m)| (m, k)).collect();
            let mut matrix = DMatrix::zeros(n * members.len(), n * members.len());
            for &a in &members {
                for &b in &members {
                    if let Some(block) = nb.blocks.get(&(a, b)) {
                        matrix.view_mut((pos[&a] * n, pos[&b] * n), (n, n)).copy_from(block);
                    }
                }
            }
            Cluster { matrix }
        })
        .collect()
}

fn checked_blocks<S: HybridOperator + ?Sized>(state: &S) -> Result<NodeBlocks, HybridError> {
    let nb = state.node_blocks();
    check_hermitian(&nb)?;
    if nb.blocks.is_empty() {
        return Err(HybridError::ZeroState);
    }
    Ok(nb)
}

/// Eigenvalues of the hybrid operator on the occupied classical nodes, in
/// ascending order. Values carry the `1/(dq dp)` scale of the grid.
pub fn spectrum<S: HybridOperator + ?Sized>(state: &S) -> Result<Vec<f64>, HybridError> {
    let nb = checked_blocks(state)?;
    let mut ev: Vec<f64> = clusters(&nb).iter().flat_map(|c| hermitian_eigenvalues(&c.matrix)).collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

pub fn min_eigenvalue<S: HybridOperator + ?Sized>(state: &S) -> Result<f64, HybridError> {
    Ok(spectrum(state)?[0])
}

/// `||rho^2 dq dp - rho||_F / ||rho||_F`.
pub fn hybrid_purity_defect<S: HybridOperator + ?Sized>(state: &S) -> Result<f64, HybridError> {
    let nb = checked_blocks(state)?;
    let area = nb.grid.cell_area();
    let mut norm2 = 0.0;
    let mut defect2 = 0.0;
    for c in clusters(&nb) {
        let m = &c.matrix;
        norm2 += m.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let d = m * m * Complex64::new(area, 0.0) - m;
        defect2 += d.iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    if norm2 == 0.0 {
        return Err(HybridError::ZeroState);
    }
    Ok((defect2 / norm2).sqrt())
}

/// `-sum l ln l` over the eigenvalues normalized to unit sum. Refuses states
/// with a normalized eigenvalue below `-ENTROPY_TOL`.
pub fn von_neumann_entropy<S: HybridOperator + ?Sized>(state: &S) -> Result<f64, HybridError> {
    let ev = spectrum(state)?;
    let total: f64 = ev.iter().sum();
    if !(total > 0.0) {
        return Err(HybridError::ZeroState);
    }
    let min = ev[0] / total;
    if min < -ENTROPY_TOL {
        return Err(HybridError::NotPositive(min));
    }
    Ok(ev.iter().map(|l| l / total).filter(|&l| l > 0.0).map(|l| -l * l.ln()).sum::<f64>().max(0.0))
}

/// Classical part of an event.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeSet {
    All,
    Nodes(BTreeSet<usize>),
}

impl NodeSet {
    fn contains(&self, node: usize) -> bool {
        match self {
            NodeSet::All => true,
            NodeSet::Nodes(s) => s.contains(&node),
        }
    }
}

/// Event `P (x) 1_S`: a quantum projector times the indicator of a set of
/// classical nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    projector: QuantumOperator,
    nodes: NodeSet,
}

impl Event {
    pub fn new(projector: QuantumOperator, nodes: NodeSet) -> Result<Self, HybridError> {
        if !projector.is_hermitian(PROJECTOR_TOL) {
            return Err(HybridError::InvalidEvent("projector is not Hermitian".into()));
        }
        let sq = projector.matmul(&projector)?;
        if sq.sub(&projector)?.frobenius_norm() > PROJECTOR_TOL * projector.frobenius_norm().max(1.0) {
            return Err(HybridError::InvalidEvent("projector is not idempotent".into()));
        }
        Ok(Self { projector, nodes })
    }

    /// `|psi_i><psi_i|` anywhere in phase space.
    pub fn outcome(dim: usize, i: usize) -> Self {
        Self { projector: QuantumOperator::basis_dyad(dim, i, i), nodes: NodeSet::All }
    }

    /// Identity on the quantum sector at a single classical node.
    pub fn at_node(dim: usize, node: usize) -> Self {
        Self { projector: QuantumOperator::identity(dim), nodes: NodeSet::Nodes([node].into()) }
    }

    pub fn projector(&self) -> &QuantumOperator {
        &self.projector
    }

    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }
}

/// `Tr(E rho) / Tr(rho)` with the discrete hybrid trace. Negative values are
/// reported as they are.
pub fn event_probability<S: HybridOperator + ?Sized>(state: &S, event: &Event) -> Result<f64, HybridError> {
    let nb = checked_blocks(state)?;
    if event.projector.dim() != nb.dim {
        return Err(HybridError::DimensionMismatch { expected: nb.dim, found: event.projector.dim() });
    }
    if let NodeSet::Nodes(s) = &event.nodes {
        if let Some(&bad) = s.iter().find(|&&n| n >= nb.grid.len()) {
            return Err(HybridError::InvalidEvent(format!("node {bad} outside the grid")));
        }
    }
    let p = event.projector.matrix();
    let mut total = Complex64::new(0.0, 0.0);
    let mut hit = Complex64::new(0.0, 0.0);
    for (&(a, b), m) in &nb.blocks {
        if a != b {
            continue;
        }
        total += m.trace();
        if event.nodes.contains(a) {
            hit += (p * m).trace();
        }
    }
    if total.norm() == 0.0 {
        return Err(HybridError::ZeroState);
    }
    Ok((hit / total).re)
}

/// Probabilities of the eigenvalues `v_i`, i.e. of the events
/// `|psi_i><psi_i| (x) I`.
pub fn outcome_probabilities<S: HybridOperator + ?Sized>(state: &S) -> Result<Vec<f64>, HybridError> {
    let rho = reduce_qm(state)?;
    let tr = rho.trace().re;
    if tr == 0.0 {
        return Err(HybridError::ZeroState);
    }
    Ok((0..rho.dim()).map(|i| rho.get(i, i).re / tr).collect())
}

/// Partial trace over the classical sector, `sum_n M_nn dq dp`.
pub fn reduce_qm<S: HybridOperator + ?Sized>(state: &S) -> Result<QuantumOperator, HybridError> {
    let nb = checked_blocks(state)?;
    let mut out = DMatrix::zeros(nb.dim, nb.dim);
    for (&(a, b), m) in &nb.blocks {
        if a == b {
            out += m;
        }
    }
    Ok(QuantumOperator::new(out * Complex64::new(nb.grid.cell_area(), 0.0))?)
}

/// Partial trace over the quantum sector, `sum_i W_ii`.
pub fn reduce_cm<S: HybridOperator + ?Sized>(state: &S) -> Result<ClassicalOperator, HybridError> {
    let nb = checked_blocks(state)?;
    let mut out = ClassicalOperator::zeros(nb.grid);
    for (&(a, b), m) in &nb.blocks {
        let tr = m.trace();
        if a == b {
            out.diag_mut()[a] += tr;
        } else if tr != Complex64::new(0.0, 0.0) {
            out.push_dyad(a, b, tr)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid::{make_candidate, Candidate, DyadTerm, HamiltonianSpec, HybridDyadState, HybridGridState};
    use crate::phasespace::{PhasePoint, PhaseSpaceGrid, PolynomialObservable};

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn setup() -> (HamiltonianSpec, PhaseSpaceGrid, Vec<Complex64>) {
        let spec = HamiltonianSpec::new(
            vec![0.0, 0.0],
            vec![1.0, -1.0],
            PolynomialObservable::zero(),
            PolynomialObservable::position(),
        )
        .unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        (spec, PhaseSpaceGrid::square(4.0, 64).unwrap(), vec![c(s), c(s)])
    }

    /// Dense matrix of a dyad state over every grid node; only usable on
    /// small grids.
    fn dense(state: &HybridDyadState) -> DMatrix<Complex64> {
        let (n, g) = (state.dim(), state.grid());
        let mut m = DMatrix::zeros(n * g.len(), n * g.len());
        for t in state.terms() {
            m[(g.snap(t.ket) * n + t.i, g.snap(t.bra) * n + t.j)] += t.coeff / g.cell_area();
        }
        m
    }

    #[test]
    fn block_eigenvalues_match_dense_oracle() {
        let (spec, _, c2) = setup();
        let g = PhaseSpaceGrid::square(4.0, 8).unwrap();
        for kind in Candidate::ALL {
            let s = make_candidate(kind, &spec, &g, &c2, PhasePoint::new(0.0, 0.0), 2.0).unwrap();
            let mut oracle = hermitian_eigenvalues(&dense(&s));
            let got = spectrum(&s).unwrap();
            // the dense oracle also has the zeros of unoccupied nodes
            oracle.retain(|x| x.abs() > 1e-9);
            let nonzero: Vec<f64> = got.iter().copied().filter(|x| x.abs() > 1e-9).collect();
            assert_eq!(oracle.len(), nonzero.len(), "{kind}");
            for (a, b) in oracle.iter().zip(&nonzero) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn linear_candidate_has_negative_block() {
        let (spec, g, c2) = setup();
        let eight = make_candidate(Candidate::Linear, &spec, &g, &c2, PhasePoint::new(0.0, 0.0), 1.0).unwrap();
        let min = min_eigenvalue(&eight).unwrap();
        assert!((min + 0.5 / g.cell_area()).abs() < 1e-9);
        assert!(matches!(von_neumann_entropy(&eight), Err(HybridError::NotPositive(_))));
        let z12 = g.snap(PhasePoint::new(0.0, 0.0));
        assert!(event_probability(&eight, &Event::at_node(2, z12)).unwrap().abs() < 1e-15);
        // |+> with the relative phase chosen against c12
        let c12 = eight.terms().iter().find(|t| t.i == 0 && t.j == 1).unwrap().coeff;
        let theta = std::f64::consts::PI - c12.arg();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = QuantumOperator::projector(&[c(s), Complex64::from_polar(s, theta)]);
        let ev = Event::new(plus, NodeSet::Nodes([z12].into())).unwrap();
        assert!((event_probability(&eight, &ev).unwrap() + c12.norm()).abs() < 1e-12);
        // rho^2 has a diagonal entry at the shared node that rho lacks
        assert!(hybrid_purity_defect(&eight).unwrap() > 0.1);
    }

    #[test]
    fn collapsed_candidate_diagnostics() {
        let (spec, g, c2) = setup();
        let nine = make_candidate(Candidate::Collapsed, &spec, &g, &c2, PhasePoint::new(0.0, 0.0), 1.0).unwrap();
        assert!(min_eigenvalue(&nine).unwrap() >= 0.0);
        assert!((von_neumann_entropy(&nine).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!((hybrid_purity_defect(&nine).unwrap() - 0.5).abs() < 1e-12);
        let p = outcome_probabilities(&nine).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        let rho = reduce_qm(&nine).unwrap();
        assert!(rho.sub(&QuantumOperator::from_diagonal(&[0.5, 0.5])).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn coherent_candidate_is_pure() {
        let (spec, g, c2) = setup();
        for t in [0.0, 0.5, 1.0] {
            let seven = make_candidate(Candidate::Coherent, &spec, &g, &c2, PhasePoint::new(0.0, 0.0), t).unwrap();
            assert!(hybrid_purity_defect(&seven).unwrap() < 1e-12);
            assert!(min_eigenvalue(&seven).unwrap() > -1e-10);
            assert!(von_neumann_entropy(&seven).unwrap().abs() < 1e-10);
        }
        let seven = make_candidate(Candidate::Coherent, &spec, &g, &c2, PhasePoint::new(0.5, 0.5), 0.0).unwrap();
        let cm = reduce_cm(&seven).unwrap();
        let delta = ClassicalOperator::delta(g, PhasePoint::new(0.5, 0.5)).unwrap();
        assert!(cm.sub(&delta).unwrap().frobenius_norm() < 1e-12);
        let qm = reduce_qm(&seven).unwrap();
        assert!(qm.sub(&QuantumOperator::projector(&c2)).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn grid_and_dyad_forms_agree() {
        let (spec, g, c2) = setup();
        let s = make_candidate(Candidate::Linear, &spec, &g, &c2, PhasePoint::new(0.0, 0.0), 1.0).unwrap();
        let grid: HybridGridState = s.to_grid();
        assert_eq!(spectrum(&s).unwrap(), spectrum(&grid).unwrap());
        assert_eq!(hybrid_purity_defect(&s).unwrap(), hybrid_purity_defect(&grid).unwrap());
    }

    #[test]
    fn malformed_inputs() {
        let g = PhaseSpaceGrid::square(4.0, 8).unwrap();
        let half = HybridDyadState::new(
            2,
            g,
            vec![DyadTerm {
                i: 0,
                j: 1,
                coeff: c(1.0),
                ket: PhasePoint::new(0.0, 0.0),
                bra: PhasePoint::new(0.0, 0.0),
            }],
        )
        .unwrap();
        assert_eq!(min_eigenvalue(&half), Err(HybridError::NotHermitian));
        assert!(Event::new(QuantumOperator::from_diagonal(&[2.0, 0.0]), NodeSet::All).is_err());
        let empty = HybridDyadState::new(2, g, vec![]).unwrap();
        assert_eq!(hybrid_purity_defect(&empty), Err(HybridError::ZeroState));
    }
}
