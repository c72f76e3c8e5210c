//! Liouville dynamics on the classical sector.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ClassicalOperator, Differentiator, PhasePoint, PhaseSpaceError, PhaseSpaceGrid, PolynomialObservable};
use crate::integrate::rk4_step;

/// Largest `|lambda| dt` accepted for the explicit RK4 stepper. The scheme is
/// stable on the imaginary axis up to `2 sqrt 2`.
pub const RK4_STABILITY_LIMIT: f64 = 2.8;

/// Default maximal step for characteristic trajectories.
pub const CHARACTERISTIC_STEP: f64 = 1e-3;

/// Poisson bracket `{H, A} = dH/dq dA/dp - dH/dp dA/dq` with both derivatives
/// taken by the grid's difference scheme.
///
/// Only the diagonal part of `A` enters: nondiagonal dyads are not functions
/// of `q` and `p` and the phase-space derivatives annihilate them. The result
/// therefore never contains dyads.
pub fn poisson_bracket(h: &ClassicalOperator, a: &ClassicalOperator) -> Result<ClassicalOperator, PhaseSpaceError> {
    if h.has_dyads() {
        return Err(PhaseSpaceError::NondiagonalGenerator);
    }
    if h.grid() != a.grid() {
        return Err(PhaseSpaceError::GridMismatch);
    }
    let d = Differentiator::new(h.grid());
    let hq = d.d_dq(h.diag());
    let hp = d.d_dp(h.diag());
    let aq = d.d_dq(a.diag());
    let ap = d.d_dp(a.diag());
    let diag = (0..hq.len()).map(|n| hq[n] * ap[n] - hp[n] * aq[n]).collect();
    ClassicalOperator::from_diag(*h.grid(), diag)
}

/// Bracket generator for a polynomial Hamiltonian: exact gradients sampled on
/// the nodes, discrete derivatives of the density.
pub(crate) struct BracketGenerator {
    pub(crate) diff: Differentiator,
    pub(crate) grad_q: Vec<f64>,
    pub(crate) grad_p: Vec<f64>,
}

impl BracketGenerator {
    pub(crate) fn new(h: &PolynomialObservable, grid: &PhaseSpaceGrid) -> Self {
        let (grad_q, grad_p) = grid.points().map(|z| h.gradient(z)).unzip();
        Self { diff: Differentiator::new(grid), grad_q, grad_p }
    }

    /// Largest eigenvalue magnitude of the discrete generator.
    pub(crate) fn spectral_radius(&self) -> f64 {
        let g = self.diff.grid();
        let vq = self.grad_p.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let vp = self.grad_q.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        self.diff.symbol_bound() * (vq / g.dq() + vp / g.dp())
    }

    /// `{H, f}` on a diagonal field, optionally with `H` scaled.
    pub(crate) fn apply_scaled(&self, field: &[Complex64], scale_h: f64, out: &mut [Complex64]) {
        if scale_h == 0.0 || field.iter().all(|c| c.re == 0.0 && c.im == 0.0) {
            return;
        }
        let fq = self.diff.d_dq(field);
        let fp = self.diff.d_dp(field);
        for n in 0..field.len() {
            out[n] += (fp[n] * self.grad_q[n] - fq[n] * self.grad_p[n]) * scale_h;
        }
    }
}

pub(crate) fn check_stability(radius: f64, dt: f64) -> Result<(), PhaseSpaceError> {
    if radius * dt.abs() > RK4_STABILITY_LIMIT {
        return Err(PhaseSpaceError::Unstable { dt: dt.abs(), suggested_dt: 0.9 * RK4_STABILITY_LIMIT / radius });
    }
    Ok(())
}

/// Integrates `d rho/dt = {H, rho}` over time `t` with `steps` RK4 steps.
///
/// The diagonal part is transported; dyads are left unchanged since the
/// bracket annihilates them. The diagonal stays exactly real.
pub fn liouville_evolve(
    h: &PolynomialObservable,
    rho: &ClassicalOperator,
    t: f64,
    steps: usize,
) -> Result<ClassicalOperator, PhaseSpaceError> {
    if steps == 0 {
        return Err(PhaseSpaceError::InvalidArgument("steps must be at least 1".into()));
    }
    if !rho.is_hermitian(1e-12) {
        return Err(PhaseSpaceError::NotHermitian);
    }
    if t == 0.0 || h.is_zero() {
        return Ok(rho.clone());
    }
    let grid = *rho.grid();
    let gen = BracketGenerator::new(h, &grid);
    let dt = t / steps as f64;
    check_stability(gen.spectral_radius(), dt)?;

    let mut state: Vec<Complex64> = rho.diag().iter().map(|c| Complex64::new(c.re, 0.0)).collect();
    let rhs = |f: &[Complex64], out: &mut [Complex64]| {
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        gen.apply_scaled(f, 1.0, out);
        // a real density has a real bracket
        out.iter_mut().for_each(|o| o.im = 0.0);
    };
    for _ in 0..steps {
        rk4_step(&mut state, dt, &rhs);
    }
    Ok(ClassicalOperator::from_parts(grid, state, rho.dyads().to_vec()))
}

/// End point of a characteristic together with its boundary status.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub end: PhasePoint,
    /// Set when the path left a clamped grid at some step.
    pub exited_bounds: bool,
}

/// Symplectic integrator for Hamilton's equations of a polynomial `H`.
///
/// Separable Hamiltonians use Stormer-Verlet (leapfrog); mixed ones use the
/// implicit midpoint rule. Both are second order and symplectic.
#[derive(Debug, Clone)]
pub struct Characteristics<'a> {
    h: &'a PolynomialObservable,
    max_step: f64,
    separable: bool,
}

impl<'a> Characteristics<'a> {
    pub fn new(h: &'a PolynomialObservable) -> Self {
        Self { h, max_step: CHARACTERISTIC_STEP, separable: h.is_separable() }
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        assert!(max_step > 0.0, "step must be positive");
        self.max_step = max_step;
        self
    }

    pub fn steps_for(&self, t: f64) -> usize {
        ((t.abs() / self.max_step).ceil() as usize).max(1)
    }

    /// Flows `z0` for time `t`, calling `visit(time, point)` at every step
    /// including both end points.
    pub fn flow(&self, z0: PhasePoint, t: f64, mut visit: impl FnMut(f64, PhasePoint)) -> PhasePoint {
        visit(0.0, z0);
        if t == 0.0 {
            return z0;
        }
        let steps = self.steps_for(t);
        let dt = t / steps as f64;
        let mut z = z0;
        for k in 1..=steps {
            z = self.step(z, dt);
            visit(k as f64 * dt, z);
        }
        z
    }

    pub fn step(&self, z: PhasePoint, dt: f64) -> PhasePoint {
        if self.separable {
            let (gq, _) = self.h.gradient(z);
            let p_half = z.p - 0.5 * dt * gq;
            let (_, gp) = self.h.gradient(PhasePoint::new(z.q, p_half));
            let q = z.q + dt * gp;
            let (gq, _) = self.h.gradient(PhasePoint::new(q, p_half));
            PhasePoint::new(q, p_half - 0.5 * dt * gq)
        } else {
            let mut next = z;
            for _ in 0..100 {
                let mid = PhasePoint::new(0.5 * (z.q + next.q), 0.5 * (z.p + next.p));
                let (gq, gp) = self.h.gradient(mid);
                let cand = PhasePoint::new(z.q + dt * gp, z.p - dt * gq);
                let done = cand.distance(&next) <= 1e-15 * (1.0 + cand.q.abs() + cand.p.abs());
                next = cand;
                if done {
                    break;
                }
            }
            next
        }
    }
}

/// Flows `z0` along `dq/dt = dH/dp, dp/dt = -dH/dq` for time `t`.
pub fn characteristics_evolve(h: &PolynomialObservable, z0: PhasePoint, t: f64) -> PhasePoint {
    Characteristics::new(h).flow(z0, t, |_, _| {})
}

/// As [`characteristics_evolve`], flagging excursions off a clamped grid.
pub fn characteristics_on_grid(h: &PolynomialObservable, z0: PhasePoint, t: f64, grid: &PhaseSpaceGrid) -> Trajectory {
    let clamped = grid.boundary() == super::Boundary::Clamped;
    let mut exited = false;
    let end = Characteristics::new(h).flow(z0, t, |_, z| {
        exited |= clamped && !grid.contains(z);
    });
    Trajectory { end, exited_bounds: exited }
}

/// Mean value `Tr(f rho) / Tr(rho)` in discrete form. Dyads of `rho` do not
/// contribute because `f` is diagonal.
pub fn classical_expectation(f: &PolynomialObservable, rho: &ClassicalOperator) -> Result<f64, PhaseSpaceError> {
    let grid = rho.grid();
    let norm: Complex64 = rho.diag().iter().sum();
    if norm.norm() == 0.0 {
        return Err(PhaseSpaceError::ZeroTrace);
    }
    let weighted: Complex64 = grid.points().zip(rho.diag()).map(|(z, w)| w * f.eval_at(z)).sum();
    Ok((weighted / norm).re)
}

/// `||rho rho dq dp - rho||_F / ||rho||_F`; zero exactly for sharp states.
pub fn purity_defect(rho: &ClassicalOperator) -> Result<f64, PhaseSpaceError> {
    let norm = rho.frobenius_norm();
    if norm == 0.0 {
        return Err(PhaseSpaceError::ZeroOperator);
    }
    let sq = rho.measure_product(rho)?;
    Ok(sq.sub(rho)?.frobenius_norm() / norm)
}
