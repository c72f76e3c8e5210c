//! The grid integrator against the exact dyad transport, and factorization of
//! the dynamics when the pointer does not couple.

use hybridlab::hybrid::{
    band_limited_projection, evolve_hybrid_dyads, evolve_hybrid_grid, initial_state, min_eigenvalue, stable_dt,
    HamiltonianSpec, HybridGridState,
};
use hybridlab::phasespace::{liouville_evolve, ClassicalOperator, PhasePoint, PhaseSpaceGrid, PolynomialObservable};
use hybridlab::quantum::{von_neumann_evolve, QuantumOperator};
use hybridlab::Complex64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let c = [Complex64::new(s, 0.0), Complex64::new(s, 0.0)];
    let spec = HamiltonianSpec::new(
        vec![0.0, 0.0],
        vec![1.0, -1.0],
        PolynomialObservable::zero(),
        PolynomialObservable::position(),
    )?;

    for n in [32, 64, 128] {
        let grid = PhaseSpaceGrid::square(4.0, n)?;
        let start = initial_state(&grid, &c, PhasePoint::new(0.0, 0.0))?;
        let steps = (1.0 / stable_dt(&spec, &grid)).ceil().max(1000.0) as usize;
        let by_grid = evolve_hybrid_grid(&spec, &start.to_grid(), 1.0, steps)?;
        let exact = band_limited_projection(&evolve_hybrid_dyads(&spec, &start, 1.0)?)?;
        let err = by_grid.sub(&exact)?.frobenius_norm() / exact.frobenius_norm();
        println!(
            "{n}x{n}, {steps} steps: relative error {err:.2e}, min eigenvalue {:+.4}/A",
            min_eigenvalue(&by_grid)? * grid.cell_area()
        );
    }

    let grid = PhaseSpaceGrid::square(4.0, 32)?;
    let free = HamiltonianSpec::new(
        vec![0.3, -0.8],
        vec![0.0, 0.0],
        "0.5*p^2 + 0.5*q^2".parse()?,
        PolynomialObservable::position(),
    )?;
    let rho_qm = QuantumOperator::projector(&[Complex64::new(s, 0.0), Complex64::new(0.0, s)]);
    let raw = ClassicalOperator::from_fn(grid, |z| (-((z.q - 1.0).powi(2) + z.p.powi(2)) / 0.5).exp());
    let tr = raw.trace();
    let rho_cm = raw.scale(tr.inv());
    let joint = evolve_hybrid_grid(&free, &HybridGridState::product(&rho_qm, &rho_cm), 1.0, 1000)?;
    let apart = HybridGridState::product(
        &von_neumann_evolve(&free.quantum_hamiltonian(), &rho_qm, 1.0, free.hbar())?,
        &liouville_evolve(free.h_cm(), &rho_cm, 1.0, 1000)?,
    );
    println!("uncoupled product: |joint - separate| = {:.2e}", joint.sub(&apart)?.frobenius_norm());
    Ok(())
}
