//! Discretized (q, p) plane.

use serde::{Deserialize, Serialize};

use super::PhaseSpaceError;

/// Boundary policy for the classical grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Clamped,
}

/// Finite-difference scheme used for phase-space derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Second-order central differences (one-sided at clamped edges).
    Central,
    /// FFT differentiation; periodic grids only.
    Spectral,
}

impl Scheme {
    pub fn default_for(boundary: Boundary) -> Self {
        match boundary {
            Boundary::Periodic => Scheme::Spectral,
            Boundary::Clamped => Scheme::Central,
        }
    }
}

/// A point of the classical phase space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: f64,
    pub p: f64,
}

impl PhasePoint {
    pub const fn new(q: f64, p: f64) -> Self {
        Self { q, p }
    }

    pub fn distance(&self, other: &PhasePoint) -> f64 {
        (self.q - other.q).hypot(self.p - other.p)
    }
}

/// Uniform grid over `[q_min, q_max) x [p_min, p_max)`.
///
/// Node `(i, j)` sits at `(q_min + i dq, p_min + j dp)` and is stored at flat
/// index `i * n_p + j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    q_min: f64,
    q_max: f64,
    p_min: f64,
    p_max: f64,
    n_q: usize,
    n_p: usize,
    boundary: Boundary,
    scheme: Scheme,
}

impl PhaseSpaceGrid {
    pub fn new(
        q_range: (f64, f64),
        p_range: (f64, f64),
        n_q: usize,
        n_p: usize,
        boundary: Boundary,
    ) -> Result<Self, PhaseSpaceError> {
        let (q_min, q_max) = q_range;
        let (p_min, p_max) = p_range;
        let finite = [q_min, q_max, p_min, p_max].iter().all(|x| x.is_finite());
        if !finite || q_max <= q_min || p_max <= p_min {
            return Err(PhaseSpaceError::InvalidGrid(format!(
                "bounds must be finite and increasing, got q=[{q_min}, {q_max}], p=[{p_min}, {p_max}]"
            )));
        }
        if n_q < 3 || n_p < 3 {
            return Err(PhaseSpaceError::InvalidGrid(format!("need at least 3 nodes per axis, got {n_q}x{n_p}")));
        }
        Ok(Self { q_min, q_max, p_min, p_max, n_q, n_p, boundary, scheme: Scheme::default_for(boundary) })
    }

    /// Square periodic grid `[-half_width, half_width)^2` with `n x n` nodes.
    pub fn square(half_width: f64, n: usize) -> Result<Self, PhaseSpaceError> {
        Self::new((-half_width, half_width), (-half_width, half_width), n, n, Boundary::Periodic)
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Result<Self, PhaseSpaceError> {
        if scheme == Scheme::Spectral && self.boundary != Boundary::Periodic {
            return Err(PhaseSpaceError::InvalidGrid("spectral differentiation requires a periodic grid".into()));
        }
        self.scheme = scheme;
        Ok(self)
    }

    pub fn q_range(&self) -> (f64, f64) {
        (self.q_min, self.q_max)
    }

    pub fn p_range(&self) -> (f64, f64) {
        (self.p_min, self.p_max)
    }

    pub fn n_q(&self) -> usize {
        self.n_q
    }

    pub fn n_p(&self) -> usize {
        self.n_p
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / self.n_q as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / self.n_p as f64
    }

    /// Discrete phase-space measure `dq * dp`.
    pub fn cell_area(&self) -> f64 {
        self.dq() * self.dp()
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.n_q * self.n_p
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n_q && j < self.n_p);
        i * self.n_p + j
    }

    pub fn indices(&self, node: usize) -> (usize, usize) {
        (node / self.n_p, node % self.n_p)
    }

    pub fn q_at(&self, i: usize) -> f64 {
        self.q_min + i as f64 * self.dq()
    }

    pub fn p_at(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.dp()
    }

    pub fn point(&self, node: usize) -> PhasePoint {
        let (i, j) = self.indices(node);
        PhasePoint::new(self.q_at(i), self.p_at(j))
    }

    /// Iterator over all node coordinates in flat-index order.
    pub fn points(&self) -> impl Iterator<Item = PhasePoint> + '_ {
        (0..self.len()).map(move |n| self.point(n))
    }

    pub fn contains(&self, at: PhasePoint) -> bool {
        let tol_q = 1e-12 * (self.q_max - self.q_min);
        let tol_p = 1e-12 * (self.p_max - self.p_min);
        at.q >= self.q_min - tol_q
            && at.q <= self.q_max + tol_q
            && at.p >= self.p_min - tol_p
            && at.p <= self.p_max + tol_p
    }

    /// Nearest node to `at`, ties toward the lower index. Out-of-range points
    /// wrap on periodic grids and clamp to the edge otherwise.
    pub fn snap(&self, at: PhasePoint) -> usize {
        let i = self.snap_axis((at.q - self.q_min) / self.dq(), self.n_q);
        let j = self.snap_axis((at.p - self.p_min) / self.dp(), self.n_p);
        self.index(i, j)
    }

    /// Coordinates of the node `at` snaps to.
    pub fn snapped(&self, at: PhasePoint) -> PhasePoint {
        self.point(self.snap(at))
    }

    fn snap_axis(&self, x: f64, n: usize) -> usize {
        let k = (x - 0.5).ceil() as i64;
        match self.boundary {
            Boundary::Periodic => k.rem_euclid(n as i64) as usize,
            Boundary::Clamped => k.clamp(0, n as i64 - 1) as usize,
        }
    }

    /// Same bounds with different node counts.
    pub fn resized(&self, n_q: usize, n_p: usize) -> Result<Self, PhaseSpaceError> {
        Self::new((self.q_min, self.q_max), (self.p_min, self.p_max), n_q, n_p, self.boundary)?.with_scheme(self.scheme)
    }
}
