//! Operators on the classical sector.
//!
//! An operator is a diagonal part (one value per grid node, i.e. a function
//! of `q` and `p`) plus a sparse list of nondiagonal dyads `|a><b|`. Density
//! values are stored as function values: the pure state at a node carries
//! `1/(dq dp)` there, the discrete stand-in for `delta(0)^2`.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{PhasePoint, PhaseSpaceError, PhaseSpaceGrid};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Nondiagonal dyad `weight * |ket><bra|` between two distinct nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dyad {
    pub ket: usize,
    pub bra: usize,
    pub weight: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalOperator {
    grid: PhaseSpaceGrid,
    diag: Vec<Complex64>,
    dyads: Vec<Dyad>,
}

impl ClassicalOperator {
    pub fn zeros(grid: PhaseSpaceGrid) -> Self {
        Self { diag: vec![ZERO; grid.len()], dyads: Vec::new(), grid }
    }

    pub fn from_diag(grid: PhaseSpaceGrid, diag: Vec<Complex64>) -> Result<Self, PhaseSpaceError> {
        if diag.len() != grid.len() {
            return Err(PhaseSpaceError::ShapeMismatch { expected: grid.len(), found: diag.len() });
        }
        Ok(Self { grid, diag, dyads: Vec::new() })
    }

    pub(crate) fn from_parts(grid: PhaseSpaceGrid, diag: Vec<Complex64>, dyads: Vec<Dyad>) -> Self {
        debug_assert_eq!(diag.len(), grid.len());
        Self { grid, diag, dyads }
    }

    pub fn from_real(grid: PhaseSpaceGrid, values: Vec<f64>) -> Self {
        let diag = values.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        Self { grid, diag, dyads: Vec::new() }
    }

    /// Diagonal operator sampled from a function of the node coordinates.
    pub fn from_fn(grid: PhaseSpaceGrid, f: impl Fn(PhasePoint) -> f64) -> Self {
        Self::from_real(grid, grid.points().map(f).collect())
    }

    /// Sharp classical state: `1/(dq dp)` at the node nearest to `at`.
    pub fn delta(grid: PhaseSpaceGrid, at: PhasePoint) -> Result<Self, PhaseSpaceError> {
        if !grid.contains(at) {
            return Err(PhaseSpaceError::OutOfBounds(at));
        }
        let mut op = Self::zeros(grid);
        op.diag[grid.snap(at)] = Complex64::new(1.0 / grid.cell_area(), 0.0);
        Ok(op)
    }

    /// Adds the dyad `weight * |ket><bra|`; `ket` and `bra` must differ.
    pub fn with_dyad(mut self, ket: usize, bra: usize, weight: Complex64) -> Result<Self, PhaseSpaceError> {
        self.push_dyad(ket, bra, weight)?;
        Ok(self)
    }

    pub fn push_dyad(&mut self, ket: usize, bra: usize, weight: Complex64) -> Result<(), PhaseSpaceError> {
        let n = self.grid.len();
        if ket >= n || bra >= n {
            return Err(PhaseSpaceError::NodeOutOfRange(ket.max(bra)));
        }
        if ket == bra {
            return Err(PhaseSpaceError::DiagonalDyad(ket));
        }
        self.dyads.push(Dyad { ket, bra, weight });
        Ok(())
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn diag(&self) -> &[Complex64] {
        &self.diag
    }

    pub fn diag_mut(&mut self) -> &mut [Complex64] {
        &mut self.diag
    }

    pub fn dyads(&self) -> &[Dyad] {
        &self.dyads
    }

    pub fn dyads_mut(&mut self) -> &mut [Dyad] {
        &mut self.dyads
    }

    pub fn has_dyads(&self) -> bool {
        !self.dyads.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.diag.iter().all(|c| *c == ZERO) && self.dyads.iter().all(|d| d.weight == ZERO)
    }

    /// All nonzero matrix entries, with duplicate dyads merged.
    pub fn entries(&self) -> BTreeMap<(usize, usize), Complex64> {
        let mut map = BTreeMap::new();
        for (n, &d) in self.diag.iter().enumerate() {
            if d != ZERO {
                map.insert((n, n), d);
            }
        }
        for d in &self.dyads {
            *map.entry((d.ket, d.bra)).or_insert(ZERO) += d.weight;
        }
        map
    }

    fn from_entries(grid: PhaseSpaceGrid, entries: impl IntoIterator<Item = ((usize, usize), Complex64)>) -> Self {
        let mut op = Self::zeros(grid);
        for ((r, c), w) in entries {
            if r == c {
                op.diag[r] += w;
            } else if w != ZERO {
                op.dyads.push(Dyad { ket: r, bra: c, weight: w });
            }
        }
        op
    }

    pub fn adjoint(&self) -> Self {
        Self {
            grid: self.grid,
            diag: self.diag.iter().map(|c| c.conj()).collect(),
            dyads: self.dyads.iter().map(|d| Dyad { ket: d.bra, bra: d.ket, weight: d.weight.conj() }).collect(),
        }
    }

    /// Hermitian within `tol` relative to the largest entry.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let entries = self.entries();
        let scale = entries.values().map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        entries.iter().all(|(&(r, c), &w)| {
            let mirror = entries.get(&(c, r)).copied().unwrap_or(ZERO);
            (w - mirror.conj()).norm() <= tol * scale
        })
    }

    /// Discrete trace `sum(diag) * dq * dp`.
    pub fn trace(&self) -> Complex64 {
        self.diag.iter().sum::<Complex64>() * self.grid.cell_area()
    }

    pub fn frobenius_norm(&self) -> f64 {
        if self.dyads.is_empty() {
            return self.diag.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        }
        self.entries().values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            grid: self.grid,
            diag: self.diag.iter().map(|c| c * s).collect(),
            dyads: self.dyads.iter().map(|d| Dyad { weight: d.weight * s, ..*d }).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, PhaseSpaceError> {
        self.check_grid(other)?;
        let mut dyads = self.dyads.clone();
        dyads.extend_from_slice(&other.dyads);
        Ok(Self { grid: self.grid, diag: self.diag.iter().zip(&other.diag).map(|(a, b)| a + b).collect(), dyads })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, PhaseSpaceError> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Plain matrix product.
    pub fn matmul(&self, other: &Self) -> Result<Self, PhaseSpaceError> {
        self.check_grid(other)?;
        let left = self.entries();
        let mut rows: HashMap<usize, Vec<(usize, Complex64)>> = HashMap::new();
        for ((r, c), w) in other.entries() {
            rows.entry(r).or_default().push((c, w));
        }
        let mut out: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for ((r, k), a) in left {
            if let Some(row) = rows.get(&k) {
                for &(c, b) in row {
                    *out.entry((r, c)).or_insert(ZERO) += a * b;
                }
            }
        }
        Ok(Self::from_entries(self.grid, out))
    }

    /// Product with the discrete resolution of identity, `A B dq dp`. Under
    /// this product the sharp states are exactly idempotent.
    pub fn measure_product(&self, other: &Self) -> Result<Self, PhaseSpaceError> {
        Ok(self.matmul(other)?.scale(Complex64::new(self.grid.cell_area(), 0.0)))
    }

    pub fn commutator(&self, other: &Self) -> Result<Self, PhaseSpaceError> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    /// Left multiplication by a real observable given by its node values:
    /// the diagonal part is multiplied pointwise, dyads by the value at the
    /// ket node.
    pub fn multiply_observable(&self, values: &[f64]) -> Self {
        debug_assert_eq!(values.len(), self.grid.len());
        Self {
            grid: self.grid,
            diag: self.diag.iter().zip(values).map(|(c, v)| c * v).collect(),
            dyads: self.dyads.iter().map(|d| Dyad { weight: d.weight * values[d.ket], ..*d }).collect(),
        }
    }

    fn check_grid(&self, other: &Self) -> Result<(), PhaseSpaceError> {
        if self.grid != other.grid {
            return Err(PhaseSpaceError::GridMismatch);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasespace::{Monomial, PolynomialObservable};
    use proptest::prelude::*;

    fn grid() -> PhaseSpaceGrid {
        PhaseSpaceGrid::square(4.0, 16).unwrap()
    }

    #[test]
    fn delta_state_is_normalized_and_idempotent() {
        let g = grid();
        let rho = ClassicalOperator::delta(g, PhasePoint::new(0.3, -1.1)).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-14);
        let sq = rho.measure_product(&rho).unwrap();
        assert!(sq.sub(&rho).unwrap().frobenius_norm() < 1e-12);
        assert!(ClassicalOperator::delta(g, PhasePoint::new(4.5, 0.0)).is_err());
    }

    #[test]
    fn dyads_must_be_nondiagonal() {
        let g = grid();
        assert!(ClassicalOperator::zeros(g).with_dyad(3, 3, Complex64::new(1.0, 0.0)).is_err());
        assert!(ClassicalOperator::zeros(g).with_dyad(3, 999, Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn hermiticity_requires_conjugate_dyad_pairs() {
        let g = grid();
        let w = Complex64::new(0.2, 0.7);
        let half = ClassicalOperator::zeros(g).with_dyad(1, 2, w).unwrap();
        assert!(!half.is_hermitian(1e-12));
        let full = half.with_dyad(2, 1, w.conj()).unwrap();
        assert!(full.is_hermitian(1e-12));
        assert_eq!(full.adjoint().entries(), full.entries());
    }

    #[test]
    fn observable_multiplication_uses_ket_value() {
        let g = grid();
        let q = PolynomialObservable::position().sample(&g);
        let op =
            ClassicalOperator::zeros(g).with_dyad(g.index(10, 3), g.index(2, 3), Complex64::new(1.0, 0.0)).unwrap();
        let out = op.multiply_observable(&q);
        assert_eq!(out.dyads()[0].weight.re, g.q_at(10));
    }

    proptest! {
        #[test]
        fn polynomial_observables_commute(a in prop::collection::vec(-2.0f64..2.0, 3),
                                          b in prop::collection::vec(-2.0f64..2.0, 3)) {
            let g = grid();
            let f = PolynomialObservable::new(vec![
                Monomial::new(a[0], 0, 0), Monomial::new(a[1], 2, 0), Monomial::new(a[2], 1, 1),
            ]);
            let h = PolynomialObservable::new(vec![
                Monomial::new(b[0], 0, 0), Monomial::new(b[1], 0, 3), Monomial::new(b[2], 1, 0),
            ]);
            let comm = f.to_operator(&g).commutator(&h.to_operator(&g)).unwrap();
            prop_assert!(comm.is_zero());
        }
    }
}
