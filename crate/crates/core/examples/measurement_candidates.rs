//! The three correlated candidate states of a qubit measured by a pointer,
//! with their purity, positivity and equation-of-motion residual.

use hybridlab::hybrid::{
    hybrid_purity_defect, make_candidate, min_eigenvalue, outcome_probabilities, residual_norm, von_neumann_entropy,
    Candidate, HamiltonianSpec,
};
use hybridlab::phasespace::{PhasePoint, PhaseSpaceGrid, PolynomialObservable};
use hybridlab::Complex64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = HamiltonianSpec::new(
        vec![0.0, 0.0],
        vec![1.0, -1.0],
        PolynomialObservable::zero(),
        PolynomialObservable::position(),
    )?;
    let grid = PhaseSpaceGrid::square(4.0, 64)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let c = [Complex64::new(s, 0.0), Complex64::new(s, 0.0)];
    let z0 = PhasePoint::new(0.0, 0.0);
    let area = grid.cell_area();

    for kind in Candidate::ALL {
        println!("candidate {} ({kind:?})", kind.label());
        for t in [0.0, 0.5, 1.0] {
            let state = make_candidate(kind, &spec, &grid, &c, z0, t)?;
            let residual = if t > 0.0 {
                format!("{:.3e}", residual_norm(&spec, kind, &grid, &c, z0, t, 1e-3)?)
            } else {
                "-".into()
            };
            let entropy = von_neumann_entropy(&state).map_or_else(|_| "undefined".into(), |e| format!("{e:.4}"));
            let probs = outcome_probabilities(&state)?;
            println!(
                "  t = {t:.1}: terms {}  purity defect {:.3}  min eigenvalue {:+.3}/A  entropy {entropy}  \
                 P = ({:.3}, {:.3})  residual {residual}",
                state.terms().len(),
                hybrid_purity_defect(&state)?,
                min_eigenvalue(&state)? * area,
                probs[0],
                probs[1],
            );
        }
    }
    Ok(())
}
