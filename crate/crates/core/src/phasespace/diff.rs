//! Phase-space differentiation on grid fields.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Boundary, PhaseSpaceGrid, Scheme};

#[derive(Clone, Copy)]
enum Axis {
    Q,
    P,
}

struct SpectralAxis {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Angular wavenumbers; the Nyquist entry is zero.
    k: Vec<f64>,
}

impl SpectralAxis {
    fn new(planner: &mut FftPlanner<f64>, n: usize, spacing: f64) -> Self {
        let length = n as f64 * spacing;
        let k = (0..n)
            .map(|m| {
                if 2 * m == n {
                    0.0
                } else if m < n / 2 + n % 2 {
                    2.0 * std::f64::consts::PI * m as f64 / length
                } else {
                    2.0 * std::f64::consts::PI * (m as f64 - n as f64) / length
                }
            })
            .collect();
        Self { forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n), k }
    }
}

/// Derivative operators `d/dq` and `d/dp` for one grid.
///
/// Plans are built once; reuse the same instance across time steps.
pub struct Differentiator {
    grid: PhaseSpaceGrid,
    spectral: Option<(SpectralAxis, SpectralAxis)>,
}

impl Differentiator {
    pub fn new(grid: &PhaseSpaceGrid) -> Self {
        let spectral = (grid.scheme() == Scheme::Spectral).then(|| {
            let mut planner = FftPlanner::new();
            (
                SpectralAxis::new(&mut planner, grid.n_q(), grid.dq()),
                SpectralAxis::new(&mut planner, grid.n_p(), grid.dp()),
            )
        });
        Self { grid: *grid, spectral }
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    /// Largest magnitude of the discrete first-derivative symbol per unit
    /// spacing: pi for spectral, 1 for central differences.
    pub fn symbol_bound(&self) -> f64 {
        match self.grid.scheme() {
            Scheme::Spectral => std::f64::consts::PI,
            Scheme::Central => 1.0,
        }
    }

    pub fn d_dq(&self, field: &[Complex64]) -> Vec<Complex64> {
        self.derivative(field, Axis::Q)
    }

    pub fn d_dp(&self, field: &[Complex64]) -> Vec<Complex64> {
        self.derivative(field, Axis::P)
    }

    fn derivative(&self, field: &[Complex64], axis: Axis) -> Vec<Complex64> {
        assert_eq!(field.len(), self.grid.len(), "field does not match grid");
        let mut out = vec![Complex64::new(0.0, 0.0); field.len()];
        let (n_q, n_p) = (self.grid.n_q(), self.grid.n_p());
        let (lines, len, spacing) = match axis {
            Axis::Q => (n_p, n_q, self.grid.dq()),
            Axis::P => (n_q, n_p, self.grid.dp()),
        };
        let at = |line: usize, k: usize| match axis {
            Axis::Q => k * n_p + line,
            Axis::P => line * n_p + k,
        };
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        let mut scratch = Vec::new();
        for line in 0..lines {
            for (k, b) in buf.iter_mut().enumerate() {
                *b = field[at(line, k)];
            }
            if buf.iter().all(|c| c.re == 0.0 && c.im == 0.0) {
                continue;
            }
            match &self.spectral {
                Some((sq, sp)) => {
                    let ax = if matches!(axis, Axis::Q) { sq } else { sp };
                    spectral_line(ax, &mut buf, &mut scratch);
                }
                None => central_line(&mut buf, spacing, self.grid.boundary()),
            }
            for (k, b) in buf.iter().enumerate() {
                out[at(line, k)] = *b;
            }
        }
        out
    }

    /// Removes the Nyquist mode along each axis. Used to compare fields on the
    /// resolved band only; on non-spectral grids returns the input unchanged.
    pub fn filter_nyquist(&self, field: &[Complex64]) -> Vec<Complex64> {
        if self.spectral.is_none() {
            return field.to_vec();
        }
        let mut out = field.to_vec();
        let (n_q, n_p) = (self.grid.n_q(), self.grid.n_p());
        if n_p % 2 == 0 {
            for row in out.chunks_mut(n_p) {
                remove_nyquist(row);
            }
        }
        if n_q % 2 == 0 {
            let mut buf = vec![Complex64::new(0.0, 0.0); n_q];
            for j in 0..n_p {
                for i in 0..n_q {
                    buf[i] = out[i * n_p + j];
                }
                remove_nyquist(&mut buf);
                for i in 0..n_q {
                    out[i * n_p + j] = buf[i];
                }
            }
        }
        out
    }
}

fn spectral_line(ax: &SpectralAxis, buf: &mut [Complex64], scratch: &mut Vec<Complex64>) {
    let n = buf.len();
    scratch.resize(ax.forward.get_inplace_scratch_len(), Complex64::new(0.0, 0.0));
    ax.forward.process_with_scratch(buf, scratch);
    let norm = 1.0 / n as f64;
    for (b, &k) in buf.iter_mut().zip(&ax.k) {
        *b *= Complex64::new(0.0, k * norm);
    }
    scratch.resize(ax.inverse.get_inplace_scratch_len(), Complex64::new(0.0, 0.0));
    ax.inverse.process_with_scratch(buf, scratch);
}

fn remove_nyquist(buf: &mut [Complex64]) {
    // the Nyquist mode is (-1)^m times a constant
    let n = buf.len();
    let amp: Complex64 =
        buf.iter().enumerate().map(|(m, b)| if m % 2 == 0 { *b } else { -*b }).sum::<Complex64>() / n as f64;
    for (m, b) in buf.iter_mut().enumerate() {
        if m % 2 == 0 {
            *b -= amp;
        } else {
            *b += amp;
        }
    }
}

fn central_line(buf: &mut [Complex64], h: f64, boundary: Boundary) {
    let n = buf.len();
    let src = buf.to_vec();
    let inv = 1.0 / (2.0 * h);
    for k in 1..n - 1 {
        buf[k] = (src[k + 1] - src[k - 1]) * inv;
    }
    match boundary {
        Boundary::Periodic => {
            buf[0] = (src[1] - src[n - 1]) * inv;
            buf[n - 1] = (src[0] - src[n - 2]) * inv;
        }
        Boundary::Clamped => {
            buf[0] = (src[0] * -3.0 + src[1] * 4.0 - src[2]) * inv;
            buf[n - 1] = (src[n - 1] * 3.0 - src[n - 2] * 4.0 + src[n - 3]) * inv;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasespace::PhasePoint;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn spectral_derivative_of_periodic_mode_is_exact() {
        let grid = PhaseSpaceGrid::square(std::f64::consts::PI, 32).unwrap();
        let d = Differentiator::new(&grid);
        let f: Vec<_> = grid.points().map(|z| c((2.0 * z.q).sin() * z.p.cos())).collect();
        let dq = d.d_dq(&f);
        let dp = d.d_dp(&f);
        for (n, z) in grid.points().enumerate() {
            assert!((dq[n].re - 2.0 * (2.0 * z.q).cos() * z.p.cos()).abs() < 1e-11);
            assert!((dp[n].re + (2.0 * z.q).sin() * z.p.sin()).abs() < 1e-11);
        }
    }

    #[test]
    fn central_derivative_is_exact_for_quadratics_in_interior() {
        let grid = PhaseSpaceGrid::new((-1.0, 1.0), (-1.0, 1.0), 16, 16, Boundary::Clamped).unwrap();
        let d = Differentiator::new(&grid);
        let f: Vec<_> = grid.points().map(|z: PhasePoint| c(z.q * z.q + 3.0 * z.p)).collect();
        let dq = d.d_dq(&f);
        let dp = d.d_dp(&f);
        for (n, z) in grid.points().enumerate() {
            // one-sided second-order stencils are also exact on quadratics
            assert!((dq[n].re - 2.0 * z.q).abs() < 1e-12, "node {n}");
            assert!((dp[n].re - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn nyquist_filter_removes_only_the_alternating_mode() {
        let grid = PhaseSpaceGrid::square(1.0, 8).unwrap();
        let d = Differentiator::new(&grid);
        let smooth: Vec<_> = grid.points().map(|z| c((std::f64::consts::PI * z.q).cos())).collect();
        let alternating: Vec<_> = (0..grid.len())
            .map(|n| {
                let (i, _) = grid.indices(n);
                c(if i % 2 == 0 { 1.0 } else { -1.0 })
            })
            .collect();
        let mixed: Vec<_> = smooth.iter().zip(&alternating).map(|(a, b)| a + b).collect();
        let filtered = d.filter_nyquist(&mixed);
        for (a, b) in filtered.iter().zip(&smooth) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
