//! Dynamics residual of a dyad state.
//!
//! The state is projected onto the grid at `t - dt`, `t` and `t + dt`, and
//! the centered time difference is compared with the right-hand side of the
//! equation of motion evaluated at `t`. Off-grid points are projected with
//! the band-limited interpolation kernel of the grid, which reduces to a
//! Kronecker delta on nodes. Classically nondiagonal terms stay in factored
//! form `c u w^T` so no dense classical matrix is ever built.

use num_complex::Complex64;

use super::candidates::{advance_candidate, make_candidate, Candidate};
use super::rhs::ComponentGenerator;
use super::{HamiltonianSpec, HybridDyadState, HybridError, HybridGridState};
use crate::phasespace::{Boundary, ClassicalOperator, Differentiator, PhasePoint, PhaseSpaceGrid, Scheme};

/// Interpolation weights of a point on one axis.
fn axis_weights(n: usize, min: f64, spacing: f64, x0: f64, scheme: Scheme, boundary: Boundary) -> Vec<f64> {
    let length = n as f64 * spacing;
    match scheme {
        Scheme::Spectral => {
            let half = n / 2;
            let full = if n.is_multiple_of(2) { half - 1 } else { half };
            (0..n)
                .map(|m| {
                    let phase = 2.0 * std::f64::consts::PI * (min + m as f64 * spacing - x0) / length;
                    let mut s = 1.0;
                    for k in 1..=full {
                        s += 2.0 * (k as f64 * phase).cos();
                    }
                    if n.is_multiple_of(2) {
                        s += (half as f64 * phase).cos();
                    }
                    s / n as f64
                })
                .collect()
        }
        Scheme::Central => {
            // linear interpolation between the two bracketing nodes
            let mut w = vec![0.0; n];
            let s = (x0 - min) / spacing;
            let lo = s.floor();
            let frac = s - lo;
            let lo = lo as i64;
            for (node, weight) in [(lo, 1.0 - frac), (lo + 1, frac)] {
                let k = match boundary {
                    Boundary::Periodic => node.rem_euclid(n as i64),
                    Boundary::Clamped => node.clamp(0, n as i64 - 1),
                } as usize;
                w[k] += weight;
            }
            w
        }
    }
}

fn point_vector(grid: &PhaseSpaceGrid, z: PhasePoint) -> Vec<f64> {
    let (q0, _) = grid.q_range();
    let (p0, _) = grid.p_range();
    let a = axis_weights(grid.n_q(), q0, grid.dq(), z.q, grid.scheme(), grid.boundary());
    let b = axis_weights(grid.n_p(), p0, grid.dp(), z.p, grid.scheme(), grid.boundary());
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// `coeff * ket bra^T` with real profile vectors.
struct LowRank {
    coeff: Complex64,
    ket: Vec<f64>,
    bra: Vec<f64>,
}

#[derive(Default)]
struct Component {
    diag: Vec<Complex64>,
    dyads: Vec<LowRank>,
}

impl Component {
    fn norm_sqr(&self) -> f64 {
        let mut total: f64 = self.diag.iter().map(|z| z.norm_sqr()).sum();
        for (k, a) in self.dyads.iter().enumerate() {
            if !self.diag.is_empty() {
                let overlap: Complex64 =
                    self.diag.iter().zip(&a.ket).zip(&a.bra).map(|((d, u), w)| d.conj() * (u * w)).sum();
                total += 2.0 * (overlap * a.coeff).re;
            }
            for b in &self.dyads[k..] {
                let kets: f64 = a.ket.iter().zip(&b.ket).map(|(x, y)| x * y).sum();
                let bras: f64 = a.bra.iter().zip(&b.bra).map(|(x, y)| x * y).sum();
                let inner = (a.coeff.conj() * b.coeff).re * kets * bras;
                total += if std::ptr::eq(a, b) { inner } else { 2.0 * inner };
            }
        }
        total.max(0.0)
    }
}

/// Smooth projection of a dyad state, component by component.
fn project(state: &HybridDyadState) -> Vec<Component> {
    let (n, grid) = (state.dim(), *state.grid());
    let mut comps: Vec<Component> = (0..n * n).map(|_| Component::default()).collect();
    let inv_area = 1.0 / grid.cell_area();
    for t in state.terms() {
        let comp = &mut comps[t.i * n + t.j];
        let c = t.coeff * inv_area;
        let u = point_vector(&grid, t.ket);
        if t.is_classically_diagonal() {
            if comp.diag.is_empty() {
                comp.diag = vec![Complex64::new(0.0, 0.0); grid.len()];
            }
            for (d, x) in comp.diag.iter_mut().zip(&u) {
                *d += c * x;
            }
        } else {
            comp.dyads.push(LowRank { coeff: c, ket: u, bra: point_vector(&grid, t.bra) });
        }
    }
    comps
}

/// Grid form of a classically diagonal dyad state using the band-limited
/// kernel instead of nearest-node snapping. Off-grid points spread over the
/// neighbouring nodes; on-grid points give the same state as
/// [`HybridDyadState::to_grid`].
pub fn band_limited_projection(state: &HybridDyadState) -> Result<HybridGridState, HybridError> {
    if let Some(t) = state.terms().iter().find(|t| !t.is_classically_diagonal()) {
        return Err(HybridError::UnsupportedTerm { i: t.i, j: t.j });
    }
    let grid = *state.grid();
    let components = project(state)
        .into_iter()
        .map(|c| {
            if c.diag.is_empty() {
                ClassicalOperator::zeros(grid)
            } else {
                ClassicalOperator::from_diag(grid, c.diag).expect("length matches grid")
            }
        })
        .collect();
    HybridGridState::from_components(state.dim(), components)
}

/// Normalized residual `||(S(t+dt) - S(t-dt)) / (2 dt) - RHS(S(t))||_F /
/// ||S(t)||_F` for three snapshots of a dyad state. The alternating grid mode
/// is removed from the diagonal parts before taking the norm.
pub fn residual_norm_of_states(
    spec: &HamiltonianSpec,
    minus: &HybridDyadState,
    now: &HybridDyadState,
    plus: &HybridDyadState,
    dt: f64,
) -> Result<f64, HybridError> {
    if !(dt > 0.0) {
        return Err(HybridError::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let n = now.dim();
    spec.check_dim(n)?;
    let grid = *now.grid();
    if *minus.grid() != grid || *plus.grid() != grid || minus.dim() != n || plus.dim() != n {
        return Err(HybridError::InvalidArgument("snapshots must share grid and dimension".into()));
    }
    let (pm, p0, pp) = (project(minus), project(now), project(plus));
    let diff = Differentiator::new(&grid);
    let zeros = vec![Complex64::new(0.0, 0.0); grid.len()];
    let inv = 1.0 / (2.0 * dt);

    let mut res2 = 0.0;
    let mut norm2 = 0.0;
    for (k, ((cm, c0), cp)) in pm.into_iter().zip(p0).zip(pp).enumerate() {
        norm2 += c0.norm_sqr();
        let occupied = !(cm.diag.is_empty() && c0.diag.is_empty() && cp.diag.is_empty());
        if !occupied && cm.dyads.is_empty() && c0.dyads.is_empty() && cp.dyads.is_empty() {
            continue;
        }
        let gen = ComponentGenerator::new(spec, &grid, k / n, k % n);
        let mut r = Component::default();
        if occupied {
            let fm = if cm.diag.is_empty() { &zeros } else { &cm.diag };
            let fp = if cp.diag.is_empty() { &zeros } else { &cp.diag };
            let f0 = if c0.diag.is_empty() { &zeros } else { &c0.diag };
            let mut rhs = vec![Complex64::new(0.0, 0.0); grid.len()];
            gen.apply_diag(f0, &mut rhs);
            let raw: Vec<Complex64> = (0..grid.len()).map(|m| (fp[m] - fm[m]) * inv - rhs[m]).collect();
            r.diag = diff.filter_nyquist(&raw);
        }
        for d in cp.dyads {
            r.dyads.push(LowRank { coeff: d.coeff * inv, ..d });
        }
        for d in cm.dyads {
            r.dyads.push(LowRank { coeff: -d.coeff * inv, ..d });
        }
        for d in c0.dyads {
            // minus the phase terms; the symmetrized product splits into a
            // ket-side and a bra-side half
            let coeff = d.coeff * Complex64::new(0.0, 0.5);
            let scaled = |v: &[f64]| v.iter().zip(gen.rate()).map(|(u, r)| u * r).collect::<Vec<_>>();
            r.dyads.push(LowRank { coeff, ket: scaled(&d.ket), bra: d.bra.clone() });
            r.dyads.push(LowRank { coeff, ket: d.ket, bra: scaled(&d.bra) });
        }
        res2 += r.norm_sqr();
    }
    if norm2 == 0.0 {
        return Err(HybridError::ZeroState);
    }
    Ok((res2 / norm2).sqrt())
}

/// Residual of candidate `kind` at time `t > 0` with difference step `dt`.
/// The neighbouring snapshots are obtained by moving the time-`t` state by
/// `+-dt` with the candidate's own transport law.
#[allow(clippy::too_many_arguments)]
pub fn residual_norm(
    spec: &HamiltonianSpec,
    kind: Candidate,
    grid: &PhaseSpaceGrid,
    amplitudes: &[Complex64],
    z0: PhasePoint,
    t: f64,
    dt: f64,
) -> Result<f64, HybridError> {
    if !(t > 0.0) {
        return Err(HybridError::InvalidArgument(format!("residual needs t > 0, got {t}")));
    }
    if !(dt > 0.0) {
        return Err(HybridError::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let now = make_candidate(kind, spec, grid, amplitudes, z0, t)?;
    let plus = advance_candidate(kind, spec, &now, dt)?;
    let minus = advance_candidate(kind, spec, &now, -dt)?;
    residual_norm_of_states(spec, &minus, &now, &plus, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid::{evolve_hybrid_grid, initial_state};
    use crate::phasespace::PolynomialObservable;

    fn reference() -> HamiltonianSpec {
        HamiltonianSpec::new(
            vec![0.0, 0.0],
            vec![1.0, -1.0],
            PolynomialObservable::zero(),
            PolynomialObservable::position(),
        )
        .unwrap()
    }

    fn equal() -> Vec<Complex64> {
        vec![Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0); 2]
    }

    #[test]
    fn kernel_is_kronecker_on_nodes_and_sums_to_one() {
        let g = PhaseSpaceGrid::square(4.0, 16).unwrap();
        let u = point_vector(&g, g.point(g.index(3, 11)));
        for (n, x) in u.iter().enumerate() {
            let expect = if n == g.index(3, 11) { 1.0 } else { 0.0 };
            assert!((x - expect).abs() < 1e-14);
        }
        let off = point_vector(&g, PhasePoint::new(0.123, -1.7));
        assert!((off.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let clamped = PhaseSpaceGrid::new((-1.0, 1.0), (-1.0, 1.0), 8, 8, Boundary::Clamped).unwrap();
        let w = point_vector(&clamped, PhasePoint::new(0.1, 0.3));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn low_rank_norm_matches_dense_sum() {
        let g = PhaseSpaceGrid::square(2.0, 8).unwrap();
        let (a, b) = (PhasePoint::new(0.1, -0.3), PhasePoint::new(-0.7, 0.4));
        let mut comp = Component {
            diag: point_vector(&g, a).into_iter().map(|x| Complex64::new(x, 0.5 * x)).collect(),
            dyads: vec![
                LowRank { coeff: Complex64::new(0.3, 0.2), ket: point_vector(&g, a), bra: point_vector(&g, b) },
                LowRank { coeff: Complex64::new(-1.0, 0.7), ket: point_vector(&g, b), bra: point_vector(&g, a) },
            ],
        };
        let n = g.len();
        let mut dense = vec![Complex64::new(0.0, 0.0); n * n];
        for m in 0..n {
            dense[m * n + m] += comp.diag[m];
        }
        for d in &comp.dyads {
            for r in 0..n {
                for c in 0..n {
                    dense[r * n + c] += d.coeff * d.ket[r] * d.bra[c];
                }
            }
        }
        let oracle: f64 = dense.iter().map(|z| z.norm_sqr()).sum();
        assert!((comp.norm_sqr() - oracle).abs() < 1e-12 * oracle);
        comp.diag.clear();
        assert!(comp.norm_sqr() > 0.0);
    }

    #[test]
    fn solutions_have_small_residual_and_coherent_state_does_not() {
        let spec = reference();
        let g = PhaseSpaceGrid::square(4.0, 64).unwrap();
        let z0 = PhasePoint::new(0.0, 0.0);
        for t in [0.25, 0.5, 1.0] {
            let nine = residual_norm(&spec, Candidate::Collapsed, &g, &equal(), z0, t, 1e-3).unwrap();
            let eight = residual_norm(&spec, Candidate::Linear, &g, &equal(), z0, t, 1e-3).unwrap();
            let seven = residual_norm(&spec, Candidate::Coherent, &g, &equal(), z0, t, 1e-3).unwrap();
            assert!(nine < 1e-3 && eight < 1e-3, "t={t}: {nine:e} {eight:e}");
            assert!(seven > 0.5, "t={t}: {seven}");
        }
        let single = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let r = residual_norm(&spec, Candidate::Coherent, &g, &single, z0, 1.0, 1e-3).unwrap();
        assert!(r < 1e-3);
        assert!(residual_norm(&spec, Candidate::Linear, &g, &equal(), z0, 1.0, 0.0).is_err());
    }

    #[test]
    fn residual_shrinks_when_grid_and_step_are_refined() {
        let spec = reference();
        let z0 = PhasePoint::new(0.0, 0.0);
        let mut last = f64::INFINITY;
        for (n, dt) in [(32, 4e-3), (64, 1e-3), (128, 2.5e-4)] {
            let g = PhaseSpaceGrid::square(4.0, n).unwrap();
            let r = residual_norm(&spec, Candidate::Linear, &g, &equal(), z0, 0.95, dt).unwrap();
            assert!(r < last, "n={n}: {r:e} vs {last:e}");
            last = r;
        }
    }

    #[test]
    fn projection_agrees_with_grid_engine() {
        let spec = reference();
        let g = PhaseSpaceGrid::square(4.0, 32).unwrap();
        let z0 = PhasePoint::new(0.0, 0.0);
        let start = initial_state(&g, &equal(), z0).unwrap();
        let evolved = evolve_hybrid_grid(&spec, &start.to_grid(), 1.0, 1000).unwrap().filter_nyquist();
        let eight = make_candidate(Candidate::Linear, &spec, &g, &equal(), z0, 1.0).unwrap();
        let projected = band_limited_projection(&eight).unwrap().filter_nyquist();
        let err = evolved.sub(&projected).unwrap().frobenius_norm() / projected.frobenius_norm();
        assert!(err < 0.05, "{err:e}");
    }
}
