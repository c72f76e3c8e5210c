//! Classical fourth-order Runge-Kutta step on flat complex state vectors.

use num_complex::Complex64;

/// Advances `state` by `dt` under `d state/dt = rhs(state)`.
///
/// `rhs` must overwrite its output buffer.
pub(crate) fn rk4_step<F>(state: &mut [Complex64], dt: f64, rhs: &F)
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    let n = state.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut k1 = vec![zero; n];
    let mut k2 = vec![zero; n];
    let mut k3 = vec![zero; n];
    let mut k4 = vec![zero; n];
    let mut tmp = vec![zero; n];

    rhs(state, &mut k1);
    for i in 0..n {
        tmp[i] = state[i] + k1[i] * (0.5 * dt);
    }
    rhs(&tmp, &mut k2);
    for i in 0..n {
        tmp[i] = state[i] + k2[i] * (0.5 * dt);
    }
    rhs(&tmp, &mut k3);
    for i in 0..n {
        tmp[i] = state[i] + k3[i] * dt;
    }
    rhs(&tmp, &mut k4);
    for i in 0..n {
        state[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0);
    }
}
