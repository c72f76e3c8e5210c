#![allow(clippy::needless_range_loop)]

//! Two-level von Neumann precession and the bipartite commutator
//! decomposition on random Hermitian inputs.

use std::f64::consts::PI;

use hybridlab::quantum::{commutator, decomposition_residual, von_neumann_evolve, QuantumOperator};
use hybridlab::Complex64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h = QuantumOperator::from_diagonal(&[1.0, -1.0]);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = QuantumOperator::projector(&[Complex64::new(s, 0.0), Complex64::new(s, 0.0)]);

    println!("precession of |+><+| under H = diag(1, -1):");
    for k in 0..=4 {
        let t = k as f64 * PI / 4.0;
        let rho = von_neumann_evolve(&h, &plus, t, 1.0)?;
        let c = rho.get(0, 1);
        println!("  t = {t:.4}: rho_12 = {:+.4} {:+.4}i  purity {:.6}", c.re, c.im, rho.purity());
    }
    println!("  [H, |1><2|] = (h1 - h2)|1><2|: {:?}", commutator(&h, &QuantumOperator::basis_dyad(2, 0, 1))?.get(0, 1));

    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut uniform = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    let mut hermitian = |n: usize| {
        let mut rows = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for i in 0..n {
            rows[i][i] = Complex64::new(uniform(), 0.0);
            for j in i + 1..n {
                let z = Complex64::new(uniform(), uniform());
                rows[i][j] = z;
                rows[j][i] = z.conj();
            }
        }
        QuantumOperator::from_rows(&rows).expect("square")
    };
    let mut worst = 0.0f64;
    for n in [2, 3] {
        for _ in 0..50 {
            let (h1, h2, r1, r2) = (hermitian(n), hermitian(n), hermitian(n), hermitian(n));
            worst = worst.max(decomposition_residual(&h1, &h2, &r1, &r2, 1.0)?);
        }
    }
    println!("commutator decomposition over 100 random pairs: worst residual {worst:.2e}");
    Ok(())
}
