//! Finite-dimensional quantum sector.
//!
//! Operators are dense `N x N` complex matrices. Density matrices are the
//! Hermitian, unit-trace, positive semidefinite case.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::integrate::rk4_step;

/// Tolerance for Hermiticity and unit trace checks.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Smallest eigenvalue still accepted for a density matrix.
pub const POSITIVITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("operator is not Hermitian")]
    NotHermitian,
    #[error("not a density matrix: {0}")]
    NotDensity(String),
    #[error("{0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumOperator {
    m: DMatrix<Complex64>,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

impl QuantumOperator {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self, QuantumError> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(QuantumError::NotSquare(m.nrows(), m.ncols()));
        }
        Ok(Self { m })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self, QuantumError> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(QuantumError::NotSquare(n, bad.len()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn zeros(dim: usize) -> Self {
        Self { m: DMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { m: DMatrix::identity(dim, dim) }
    }

    pub fn from_diagonal(values: &[f64]) -> Self {
        let d = DVector::from_iterator(values.len(), values.iter().map(|&x| c(x)));
        Self { m: DMatrix::from_diagonal(&d) }
    }

    /// `|a><b|` in the standard basis.
    pub fn basis_dyad(dim: usize, a: usize, b: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(a, b)] = c(1.0);
        Self { m }
    }

    /// `|psi><psi|` for a (not necessarily normalized) vector.
    pub fn projector(psi: &[Complex64]) -> Self {
        let v = DVector::from_column_slice(psi);
        Self { m: &v * v.adjoint() }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.m[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self { m: self.m.adjoint() }
    }

    pub fn trace(&self) -> Complex64 {
        self.m.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { m: &self.m * s }
    }

    pub fn add(&self, other: &Self) -> Result<Self, QuantumError> {
        check_dims(self, other)?;
        Ok(Self { m: &self.m + &other.m })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, QuantumError> {
        check_dims(self, other)?;
        Ok(Self { m: &self.m - &other.m })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, QuantumError> {
        check_dims(self, other)?;
        Ok(Self { m: &self.m * &other.m })
    }

    /// Kronecker product `self (x) other`.
    pub fn kron(&self, other: &Self) -> Self {
        Self { m: self.m.kronecker(&other.m) }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let scale = self.m.iter().map(|x| x.norm()).fold(1.0, f64::max);
        (&self.m - self.m.adjoint()).iter().all(|x| x.norm() <= tol * scale)
    }

    /// Eigenvalues of a Hermitian operator in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>, QuantumError> {
        if !self.is_hermitian(HERMITIAN_TOL) {
            return Err(QuantumError::NotHermitian);
        }
        Ok(hermitian_eigenvalues(&self.m))
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        (&self.m * &self.m).trace().re
    }

    /// Checks the density-matrix invariants.
    pub fn validate_density(&self) -> Result<(), QuantumError> {
        if !self.is_hermitian(HERMITIAN_TOL) {
            return Err(QuantumError::NotHermitian);
        }
        let tr = self.trace();
        if (tr - c(1.0)).norm() > HERMITIAN_TOL {
            return Err(QuantumError::NotDensity(format!("trace {tr}")));
        }
        let min = self.eigenvalues()?[0];
        if min < -POSITIVITY_TOL {
            return Err(QuantumError::NotDensity(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }
}

pub(crate) fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn check_dims(a: &QuantumOperator, b: &QuantumOperator) -> Result<(), QuantumError> {
    if a.dim() != b.dim() {
        return Err(QuantumError::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(())
}

/// `AB - BA`.
pub fn commutator(a: &QuantumOperator, b: &QuantumOperator) -> Result<QuantumOperator, QuantumError> {
    check_dims(a, b)?;
    Ok(QuantumOperator { m: &a.m * &b.m - &b.m * &a.m })
}

/// Symmetrized product `(AB + BA) / 2`.
pub fn sym_product(a: &QuantumOperator, b: &QuantumOperator) -> Result<QuantumOperator, QuantumError> {
    check_dims(a, b)?;
    Ok(QuantumOperator { m: (&a.m * &b.m + &b.m * &a.m) * c(0.5) })
}

fn check_generator(h: &QuantumOperator, rho: &QuantumOperator) -> Result<(), QuantumError> {
    check_dims(h, rho)?;
    if !h.is_hermitian(HERMITIAN_TOL) {
        return Err(QuantumError::NotHermitian);
    }
    rho.validate_density()
}

/// Exact solution of `d rho/dt = [H, rho] / (i hbar)` for time-independent
/// `H`: diagonalize once, then conjugate with `exp(-i H t / hbar)`.
pub fn von_neumann_evolve(
    h: &QuantumOperator,
    rho: &QuantumOperator,
    t: f64,
    hbar: f64,
) -> Result<QuantumOperator, QuantumError> {
    check_generator(h, rho)?;
    if hbar <= 0.0 {
        return Err(QuantumError::InvalidArgument("hbar must be positive".into()));
    }
    if t == 0.0 {
        return Ok(rho.clone());
    }
    let eig = h.m.clone().symmetric_eigen();
    let phases =
        DVector::from_iterator(h.dim(), eig.eigenvalues.iter().map(|&e| Complex64::from_polar(1.0, -e * t / hbar)));
    let u = &eig.eigenvectors * DMatrix::from_diagonal(&phases) * eig.eigenvectors.adjoint();
    Ok(QuantumOperator { m: &u * &rho.m * u.adjoint() })
}

/// Same equation integrated with `steps` RK4 steps. Kept as an independent
/// cross-check of [`von_neumann_evolve`].
pub fn von_neumann_evolve_rk4(
    h: &QuantumOperator,
    rho: &QuantumOperator,
    t: f64,
    steps: usize,
    hbar: f64,
) -> Result<QuantumOperator, QuantumError> {
    check_generator(h, rho)?;
    if steps == 0 || hbar <= 0.0 {
        return Err(QuantumError::InvalidArgument("need steps >= 1 and hbar > 0".into()));
    }
    let n = h.dim();
    let factor = Complex64::new(0.0, -1.0 / hbar);
    let rhs = |flat: &[Complex64], out: &mut [Complex64]| {
        let r = DMatrix::from_column_slice(n, n, flat);
        let d = (&h.m * &r - &r * &h.m) * factor;
        out.copy_from_slice(d.as_slice());
    };
    let mut state = rho.m.as_slice().to_vec();
    let dt = t / steps as f64;
    for _ in 0..steps {
        rk4_step(&mut state, dt, &rhs);
    }
    Ok(QuantumOperator { m: DMatrix::from_column_slice(n, n, &state) })
}

/// Frobenius norm of the difference between the two sides of the bipartite
/// decomposition
///
/// `[H1 (x) H2, r1 (x) r2] / (i hbar) = [H1, r1]/(i hbar) (x) {H2, r2}/2
///                                    + {H1, r1}/2 (x) [H2, r2]/(i hbar)`.
///
/// It is an algebraic identity, so the result is roundoff-sized.
pub fn decomposition_residual(
    h1: &QuantumOperator,
    h2: &QuantumOperator,
    rho1: &QuantumOperator,
    rho2: &QuantumOperator,
    hbar: f64,
) -> Result<f64, QuantumError> {
    check_dims(h1, rho1)?;
    check_dims(h2, rho2)?;
    let inv = Complex64::new(0.0, -1.0 / hbar);
    let full = commutator(&h1.kron(h2), &rho1.kron(rho2))?.scale(inv);
    let first = commutator(h1, rho1)?.scale(inv).kron(&sym_product(h2, rho2)?);
    let second = sym_product(h1, rho1)?.kron(&commutator(h2, rho2)?.scale(inv));
    Ok(full.sub(&first.add(&second)?)?.frobenius_norm())
}
