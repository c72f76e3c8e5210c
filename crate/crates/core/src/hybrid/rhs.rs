use num_complex::Complex64;
use rayon::prelude::*;

use super::{HamiltonianSpec, HybridError, HybridGridState};
use crate::integrate::rk4_step;
use crate::phasespace::{
    check_stability, BracketGenerator, ClassicalOperator, Dyad, PhaseSpaceGrid, RK4_STABILITY_LIMIT,
};

const HERMITIAN_TOL: f64 = 1e-10;

/// Generator of one component `W_ij`.
pub(crate) struct ComponentGenerator {
    bracket: BracketGenerator,
    /// `((h_i - h_j) + (v_i - v_j) V_cm(node)) / hbar` per node.
    rate: Vec<f64>,
    diagonal: bool,
}

impl ComponentGenerator {
    pub(crate) fn new(spec: &HamiltonianSpec, grid: &PhaseSpaceGrid, i: usize, j: usize) -> Self {
        let (dh, dv) = (spec.h()[i] - spec.h()[j], spec.v()[i] - spec.v()[j]);
        let rate = grid.points().map(|z| (dh + dv * spec.v_cm().eval_at(z)) / spec.hbar()).collect();
        Self { bracket: BracketGenerator::new(&spec.pair_hamiltonian(i, j), grid), rate, diagonal: i == j }
    }

    pub(crate) fn radius(&self) -> f64 {
        self.bracket.spectral_radius() + self.rate.iter().fold(0.0f64, |m, r| m.max(r.abs()))
    }

    pub(crate) fn rate(&self) -> &[f64] {
        &self.rate
    }

    /// Phase rate of a classical dyad: `V_cm` enters through the symmetrized
    /// product `(V W + W V)/2`, i.e. the mean of its values at ket and bra.
    pub(crate) fn dyad_rate(&self, d: &Dyad) -> f64 {
        0.5 * (self.rate[d.ket] + self.rate[d.bra])
    }

    /// Overwrites `out` with the right-hand side for a diagonal field.
    pub(crate) fn apply_diag(&self, field: &[Complex64], out: &mut [Complex64]) {
        for ((o, f), r) in out.iter_mut().zip(field).zip(&self.rate) {
            *o = Complex64::new(f.im * r, -f.re * r);
        }
        self.bracket.apply_scaled(field, 1.0, out);
        if self.diagonal {
            out.iter_mut().for_each(|o| o.im = 0.0);
        }
    }

    fn rhs_operator(&self, w: &ClassicalOperator) -> ClassicalOperator {
        let mut diag = vec![Complex64::new(0.0, 0.0); w.diag().len()];
        self.apply_diag(w.diag(), &mut diag);
        let dyads = w
            .dyads()
            .iter()
            .map(|d| Dyad { weight: d.weight * Complex64::new(0.0, -self.dyad_rate(d)), ..*d })
            .collect();
        ClassicalOperator::from_parts(*w.grid(), diag, dyads)
    }
}

fn upper_pairs(dim: usize) -> Vec<(usize, usize)> {
    (0..dim).flat_map(|i| (i..dim).map(move |j| (i, j))).collect()
}

fn check_state(spec: &HamiltonianSpec, state: &HybridGridState) -> Result<(), HybridError> {
    spec.check_dim(state.dim())?;
    if !state.is_hermitian(HERMITIAN_TOL) {
        return Err(HybridError::NotHermitian);
    }
    Ok(())
}

fn assemble(dim: usize, upper: Vec<((usize, usize), ClassicalOperator)>, grid: PhaseSpaceGrid) -> HybridGridState {
    let mut out = HybridGridState::zeros(dim, grid);
    for ((i, j), w) in upper {
        if i != j {
            *out.component_mut(j, i) = w.adjoint();
        }
        *out.component_mut(i, j) = w;
    }
    out
}

/// Right-hand side of the hybrid equation of motion, component by component.
/// The bracket terms see only the diagonal part of each component;
/// classical dyads pick up the phase terms alone, with `V_cm` applied as the
/// symmetrized product so that the result stays Hermitian.
pub fn hybrid_rhs(spec: &HamiltonianSpec, state: &HybridGridState) -> Result<HybridGridState, HybridError> {
    check_state(spec, state)?;
    let grid = *state.grid();
    let upper = upper_pairs(state.dim())
        .into_par_iter()
        .map(|(i, j)| ((i, j), ComponentGenerator::new(spec, &grid, i, j).rhs_operator(state.component(i, j))))
        .collect();
    Ok(assemble(state.dim(), upper, grid))
}

/// Largest stable RK4 step for `spec` on `grid`, with a 10% margin.
pub fn stable_dt(spec: &HamiltonianSpec, grid: &PhaseSpaceGrid) -> f64 {
    let radius = upper_pairs(spec.dim())
        .into_iter()
        .map(|(i, j)| ComponentGenerator::new(spec, grid, i, j).radius())
        .fold(0.0, f64::max);
    if radius == 0.0 {
        f64::INFINITY
    } else {
        0.9 * RK4_STABILITY_LIMIT / radius
    }
}

/// Fails with the stability error (carrying a suggested step) when RK4 with
/// step `dt` would be unstable for `spec` on `grid`.
pub fn check_time_step(spec: &HamiltonianSpec, grid: &PhaseSpaceGrid, dt: f64) -> Result<(), HybridError> {
    let radius = upper_pairs(spec.dim())
        .into_iter()
        .map(|(i, j)| ComponentGenerator::new(spec, grid, i, j).radius())
        .fold(0.0, f64::max);
    Ok(check_stability(radius, dt)?)
}

/// Integrates the hybrid equation with `steps` RK4 steps. Only the upper
/// triangle is stepped; the lower triangle is its adjoint, so Hermiticity
/// holds exactly. Classical dyads rotate in closed form.
pub fn evolve_hybrid_grid(
    spec: &HamiltonianSpec,
    state: &HybridGridState,
    t: f64,
    steps: usize,
) -> Result<HybridGridState, HybridError> {
    check_state(spec, state)?;
    if steps == 0 {
        return Err(HybridError::InvalidArgument("steps must be at least 1".into()));
    }
    if t == 0.0 {
        return Ok(state.clone());
    }
    let grid = *state.grid();
    let dt = t / steps as f64;
    let generators: Vec<_> = upper_pairs(state.dim())
        .into_iter()
        .map(|(i, j)| ((i, j), ComponentGenerator::new(spec, &grid, i, j)))
        .collect();
    let radius = generators.iter().map(|(_, g)| g.radius()).fold(0.0, f64::max);
    check_stability(radius, dt)?;

    let upper = generators
        .into_par_iter()
        .map(|((i, j), gen)| {
            let w = state.component(i, j);
            let mut field = w.diag().to_vec();
            if i == j {
                field.iter_mut().for_each(|f| f.im = 0.0);
            }
            if field.iter().any(|f| f.re != 0.0 || f.im != 0.0) {
                let rhs = |f: &[Complex64], out: &mut [Complex64]| gen.apply_diag(f, out);
                for _ in 0..steps {
                    rk4_step(&mut field, dt, &rhs);
                }
            }
            let dyads = w
                .dyads()
                .iter()
                .map(|d| Dyad { weight: d.weight * Complex64::from_polar(1.0, -gen.dyad_rate(d) * t), ..*d })
                .collect();
            ((i, j), ClassicalOperator::from_parts(grid, field, dyads))
        })
        .collect();
    Ok(assemble(state.dim(), upper, grid))
}
