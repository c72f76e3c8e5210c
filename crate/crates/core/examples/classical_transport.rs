//! Liouville transport of a Gaussian pointer density: free streaming and one
//! full turn of the harmonic oscillator, compared with the characteristics.

use std::f64::consts::PI;

use hybridlab::phasespace::{
    characteristics_evolve, classical_expectation, liouville_evolve, purity_defect, ClassicalOperator, PhasePoint,
    PhaseSpaceGrid, PolynomialObservable,
};

fn gaussian(grid: PhaseSpaceGrid, at: PhasePoint, sigma: f64) -> ClassicalOperator {
    let raw = ClassicalOperator::from_fn(grid, |z| (-(z.distance(&at).powi(2)) / (2.0 * sigma * sigma)).exp());
    let tr = raw.trace();
    raw.scale(tr.inv())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = PhaseSpaceGrid::square(4.0, 64)?;
    let q = PolynomialObservable::position();
    let p = PolynomialObservable::momentum();

    let free: PolynomialObservable = "0.5*p^2".parse()?;
    let start = PhasePoint::new(0.0, 1.0);
    let rho = gaussian(grid, start, 0.5);
    println!("free streaming under H = {free}");
    for t in [0.0, 0.25, 0.5, 1.0] {
        let out = liouville_evolve(&free, &rho, t, 200)?;
        let z = characteristics_evolve(&free, start, t);
        println!(
            "  t = {t:.1}: <q> = {:+.4}  <p> = {:+.4}   characteristic ({:+.4}, {:+.4})",
            classical_expectation(&q, &out)?,
            classical_expectation(&p, &out)?,
            z.q,
            z.p
        );
    }

    let osc: PolynomialObservable = "0.5*q^2 + 0.5*p^2".parse()?;
    let rho = gaussian(grid, PhasePoint::new(1.0, 0.0), 0.5);
    println!("harmonic rotation under H = {osc}");
    for k in 0..=4 {
        let t = k as f64 * PI / 2.0;
        let out = liouville_evolve(&osc, &rho, t, 120 * k.max(1))?;
        let drift: f64 = out.diag().iter().zip(rho.diag()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        println!(
            "  t = {t:.4}: <q> = {:+.4}  <p> = {:+.4}  |rho(t) - rho(0)| = {drift:.3e}",
            classical_expectation(&q, &out)?,
            classical_expectation(&p, &out)?
        );
    }

    let sharp = ClassicalOperator::delta(grid, PhasePoint::new(1.0, 1.0))?;
    let mixed = sharp.add(&ClassicalOperator::delta(grid, PhasePoint::new(-1.0, 0.0))?)?.scale(0.5.into());
    println!("purity defect: delta {:.3}, two-point mixture {:.3}", purity_defect(&sharp)?, purity_defect(&mixed)?);
    Ok(())
}
