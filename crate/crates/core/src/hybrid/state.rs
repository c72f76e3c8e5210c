use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::HybridError;
use crate::phasespace::{ClassicalOperator, Differentiator, PhasePoint, PhaseSpaceGrid};
use crate::quantum::QuantumOperator;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Hybrid state as an `N x N` array of classical operators `W_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridGridState {
    dim: usize,
    grid: PhaseSpaceGrid,
    components: Vec<ClassicalOperator>,
}

impl HybridGridState {
    pub fn zeros(dim: usize, grid: PhaseSpaceGrid) -> Self {
        Self { dim, grid, components: vec![ClassicalOperator::zeros(grid); dim * dim] }
    }

    /// Components in row-major order, `W_ij` at `i * dim + j`.
    pub fn from_components(dim: usize, components: Vec<ClassicalOperator>) -> Result<Self, HybridError> {
        if dim == 0 || components.len() != dim * dim {
            return Err(HybridError::DimensionMismatch { expected: dim * dim, found: components.len() });
        }
        let grid = *components[0].grid();
        if components.iter().any(|c| *c.grid() != grid) {
            return Err(crate::phasespace::PhaseSpaceError::GridMismatch.into());
        }
        Ok(Self { dim, grid, components })
    }

    /// `rho_qm (x) rho_cm`.
    pub fn product(rho_qm: &QuantumOperator, rho_cm: &ClassicalOperator) -> Self {
        let dim = rho_qm.dim();
        let components = (0..dim * dim).map(|k| rho_cm.scale(rho_qm.get(k / dim, k % dim))).collect();
        Self { dim, grid: *rho_cm.grid(), components }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn component(&self, i: usize, j: usize) -> &ClassicalOperator {
        &self.components[i * self.dim + j]
    }

    pub fn component_mut(&mut self, i: usize, j: usize) -> &mut ClassicalOperator {
        &mut self.components[i * self.dim + j]
    }

    pub fn components(&self) -> &[ClassicalOperator] {
        &self.components
    }

    /// Discrete hybrid trace `sum_i Tr_cm(W_ii)`.
    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.component(i, i).trace()).sum()
    }

    /// `W_ji = W_ij^dagger` within `tol` relative to the largest entry.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let scale = self
            .components
            .iter()
            .flat_map(|c| c.entries().into_values())
            .map(|c| c.norm())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        for i in 0..self.dim {
            for j in i..self.dim {
                let a = self.component(i, j).entries();
                let b = self.component(j, i).adjoint().entries();
                let keys = a.keys().chain(b.keys());
                for k in keys {
                    let x = a.get(k).copied().unwrap_or(ZERO);
                    let y = b.get(k).copied().unwrap_or(ZERO);
                    if (x - y).norm() > tol * scale {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.components.iter().map(|c| c.frobenius_norm().powi(2)).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Self) -> Result<Self, HybridError> {
        if self.dim != other.dim {
            return Err(HybridError::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let components =
            self.components.iter().zip(&other.components).map(|(a, b)| a.sub(b)).collect::<Result<_, _>>()?;
        Ok(Self { dim: self.dim, grid: self.grid, components })
    }

    /// Removes the alternating (Nyquist) mode from every diagonal part. On a
    /// spectral grid this mode does not move, so comparisons between
    /// transported states are made on the resolved band.
    pub fn filter_nyquist(&self) -> Self {
        let diff = Differentiator::new(&self.grid);
        let components = self
            .components
            .iter()
            .map(|c| {
                let mut out = c.clone();
                let filtered = diff.filter_nyquist(c.diag());
                out.diag_mut().copy_from_slice(&filtered);
                out
            })
            .collect();
        Self { dim: self.dim, grid: self.grid, components }
    }
}

/// One term `coeff |psi_i><psi_j| (x) |ket><bra|` of a dyad state, with the
/// classical ket and bra being sharp phase-space points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadTerm {
    pub i: usize,
    pub j: usize,
    pub coeff: Complex64,
    pub ket: PhasePoint,
    pub bra: PhasePoint,
}

impl DyadTerm {
    pub fn is_classically_diagonal(&self) -> bool {
        self.ket == self.bra
    }
}

/// Hybrid state as a list of point dyads.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HybridDyadState {
    dim: usize,
    grid: PhaseSpaceGrid,
    terms: Vec<DyadTerm>,
}

impl HybridDyadState {
    pub fn new(dim: usize, grid: PhaseSpaceGrid, terms: Vec<DyadTerm>) -> Result<Self, HybridError> {
        if let Some(t) = terms.iter().find(|t| t.i >= dim || t.j >= dim) {
            return Err(HybridError::DimensionMismatch { expected: dim, found: t.i.max(t.j) + 1 });
        }
        Ok(Self { dim, grid, terms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn terms(&self) -> &[DyadTerm] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<DyadTerm> {
        self.terms
    }

    pub fn trace(&self) -> Complex64 {
        self.terms
            .iter()
            .filter(|t| t.i == t.j && self.grid.snap(t.ket) == self.grid.snap(t.bra))
            .map(|t| t.coeff)
            .sum()
    }

    /// Each term adds `coeff / (dq dp)` at classical entry
    /// `(snap(ket), snap(bra))` of component `(i, j)`.
    pub fn to_grid(&self) -> HybridGridState {
        let mut out = HybridGridState::zeros(self.dim, self.grid);
        let inv_area = 1.0 / self.grid.cell_area();
        for t in &self.terms {
            let (a, b) = (self.grid.snap(t.ket), self.grid.snap(t.bra));
            let w = t.coeff * inv_area;
            let comp = out.component_mut(t.i, t.j);
            if a == b {
                comp.diag_mut()[a] += w;
            } else {
                comp.push_dyad(a, b, w).expect("snapped nodes are in range");
            }
        }
        out
    }
}

/// Sparse hybrid matrix grouped by classical entry: `blocks[(a, b)]` is the
/// `N x N` quantum matrix multiplying `|a><b|`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeBlocks {
    pub(crate) dim: usize,
    pub(crate) grid: PhaseSpaceGrid,
    pub(crate) blocks: BTreeMap<(usize, usize), DMatrix<Complex64>>,
}

impl NodeBlocks {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn blocks(&self) -> &BTreeMap<(usize, usize), DMatrix<Complex64>> {
        &self.blocks
    }

    fn add(&mut self, a: usize, b: usize, i: usize, j: usize, w: Complex64) {
        let dim = self.dim;
        self.blocks.entry((a, b)).or_insert_with(|| DMatrix::zeros(dim, dim))[(i, j)] += w;
    }
}

/// Common view of both state representations used by the diagnostics.
pub trait HybridOperator {
    fn node_blocks(&self) -> NodeBlocks;
}

impl HybridOperator for HybridGridState {
    fn node_blocks(&self) -> NodeBlocks {
        let mut out = NodeBlocks { dim: self.dim, grid: self.grid, blocks: BTreeMap::new() };
        for i in 0..self.dim {
            for j in 0..self.dim {
                for ((a, b), w) in self.component(i, j).entries() {
                    if w != ZERO {
                        out.add(a, b, i, j, w);
                    }
                }
            }
        }
        out
    }
}

impl HybridOperator for HybridDyadState {
    fn node_blocks(&self) -> NodeBlocks {
        let mut out = NodeBlocks { dim: self.dim, grid: self.grid, blocks: BTreeMap::new() };
        let inv_area = 1.0 / self.grid.cell_area();
        for t in &self.terms {
            if t.coeff != ZERO {
                out.add(self.grid.snap(t.ket), self.grid.snap(t.bra), t.i, t.j, t.coeff * inv_area);
            }
        }
        out
    }
}
