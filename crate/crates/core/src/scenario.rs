//! The measurement scenario: a quantum system coupled to a classical
//! pointer, all three candidate states evaluated side by side, and a verdict.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hybrid::{
    advance_candidate, band_limited_projection, check_time_step, event_probability, evolve_hybrid_grid,
    hybrid_purity_defect, initial_state, make_candidate, min_eigenvalue, outcome_probabilities,
    residual_norm_of_states, von_neumann_entropy, Candidate, Event, HamiltonianSpec, HybridDyadState, HybridError,
    HybridOperator, NodeSet,
};
use crate::phasespace::{characteristics_on_grid, Characteristics, PhasePoint, PhaseSpaceGrid, PolynomialObservable};
use crate::quantum::QuantumOperator;

/// Relative Frobenius error up to which the grid engine is taken to agree
/// with the dyad engine.
pub const ENGINE_AGREEMENT_TOL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("invalid `{field}`: {message}")]
    Config { field: &'static str, message: String },
    #[error(transparent)]
    Hybrid(#[from] HybridError),
}

impl ScenarioError {
    fn config(field: &'static str, message: impl Into<String>) -> Self {
        ScenarioError::Config { field, message: message.into() }
    }
}

/// Which candidate the run follows for marginals, entropy and the grid
/// cross-check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Linear evolution of the initial product (candidate `eight`).
    Linear,
    /// Collapse at `t = 0+`, then evolution (candidate `nine`).
    Collapse,
    /// The coherent mixture `seven`, which is only residual-tested.
    Trial,
}

impl Mode {
    pub fn candidate(self) -> Candidate {
        match self {
            Mode::Linear => Candidate::Linear,
            Mode::Collapse => Candidate::Collapsed,
            Mode::Trial => Candidate::Coherent,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Linear => "linear",
            Mode::Collapse => "collapse",
            Mode::Trial => "trial",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(Mode::Linear),
            "collapse" => Ok(Mode::Collapse),
            "trial" => Ok(Mode::Trial),
            other => Err(format!("unknown mode `{other}`, expected linear, collapse or trial")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Largest normalized dynamics residual of an admissible candidate.
    pub residual: f64,
    /// Eigenvalue tolerance in units of `1/(dq dp)`.
    pub positivity: f64,
    /// Allowed deviation of outcome probabilities from `|c_i|^2`.
    pub probability: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { residual: 0.1, positivity: 1e-8, probability: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub spec: HamiltonianSpec,
    pub amplitudes: Vec<Complex64>,
    pub pointer: PhasePoint,
    pub grid: PhaseSpaceGrid,
    pub t_final: f64,
    pub n_samples: usize,
    pub mode: Mode,
    /// Time step of the grid engine and of the residual's centered difference.
    pub dt: f64,
    pub thresholds: Thresholds,
    /// Evolve the mode's initial state with the grid engine and compare.
    pub grid_check: bool,
}

impl ScenarioConfig {
    /// Qubit with `v = (1, -1)` measured by a pointer with `V_cm = q`, equal
    /// amplitudes, pointer at the origin of an `n x n` periodic grid on
    /// `[-4, 4)^2`, `t_final = 1`, `dt = 1e-3`.
    pub fn reference(n: usize) -> Result<Self, ScenarioError> {
        let spec = build_measurement_hamiltonian(
            vec![0.0, 0.0],
            vec![1.0, -1.0],
            PolynomialObservable::zero(),
            PolynomialObservable::position(),
        )?;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let grid = PhaseSpaceGrid::square(4.0, n).map_err(HybridError::from)?;
        Ok(Self {
            spec,
            amplitudes: vec![Complex64::new(s, 0.0); 2],
            pointer: PhasePoint::new(0.0, 0.0),
            grid,
            t_final: 1.0,
            n_samples: 11,
            mode: Mode::Collapse,
            dt: 1e-3,
            thresholds: Thresholds::default(),
            grid_check: true,
        })
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let n = self.spec.dim();
        if self.amplitudes.len() != n {
            return Err(ScenarioError::config(
                "amplitudes",
                format!("expected {n} amplitudes, found {}", self.amplitudes.len()),
            ));
        }
        let norm: f64 = self.amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if !((norm - 1.0).abs() <= crate::hybrid::NORMALIZATION_TOL) {
            return Err(ScenarioError::config("amplitudes", format!("sum of |c_i|^2 is {norm}, expected 1")));
        }
        if !self.grid.contains(self.pointer) {
            return Err(ScenarioError::config(
                "pointer",
                format!("({}, {}) lies outside the grid", self.pointer.q, self.pointer.p),
            ));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(ScenarioError::config("t_final", format!("must be positive, got {}", self.t_final)));
        }
        if self.n_samples < 2 {
            return Err(ScenarioError::config("n_samples", format!("need at least 2, got {}", self.n_samples)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ScenarioError::config("dt", format!("must be positive, got {}", self.dt)));
        }
        let th = &self.thresholds;
        for (field, x) in [("residual", th.residual), ("positivity", th.positivity), ("probability", th.probability)] {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(ScenarioError::config(field, format!("threshold must be nonnegative, got {x}")));
            }
        }
        Ok(())
    }

    /// Sample times `k t_final / (n_samples - 1)`.
    pub fn times(&self) -> Vec<f64> {
        let last = (self.n_samples - 1) as f64;
        (0..self.n_samples).map(|k| self.t_final * k as f64 / last).collect()
    }

    /// `|c_i|^2`.
    pub fn outcome_weights(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    fn grid_steps(&self) -> usize {
        ((self.t_final / self.dt).round() as usize).max(1)
    }
}

/// `H_qm = diag(h)`, `V_qm = diag(v)` in the measurement basis, coupled to
/// the pointer through `V_cm`.
pub fn build_measurement_hamiltonian(
    h: Vec<f64>,
    v: Vec<f64>,
    h_cm: PolynomialObservable,
    v_cm: PolynomialObservable,
) -> Result<HamiltonianSpec, HybridError> {
    HamiltonianSpec::new(h, v, h_cm, v_cm)
}

/// Diagnostics of one candidate at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    /// Undefined at `t = 0`.
    pub residual: Option<f64>,
    pub purity_defect: f64,
    pub min_eigenvalue: f64,
    /// Undefined for states that are not positive.
    pub entropy: Option<f64>,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateSeries {
    pub candidate: Candidate,
    pub samples: Vec<Sample>,
    /// Set when an engine failed; `samples` then stops before the failure.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateVerdict {
    RejectedDynamics,
    RejectedPositivity,
    RejectedProbabilities,
    Accepted,
    Errored(String),
}

impl CandidateVerdict {
    pub fn as_str(&self) -> &str {
        match self {
            CandidateVerdict::RejectedDynamics => "rejected_dynamics",
            CandidateVerdict::RejectedPositivity => "rejected_positivity",
            CandidateVerdict::RejectedProbabilities => "rejected_probabilities",
            CandidateVerdict::Accepted => "accepted",
            CandidateVerdict::Errored(_) => "errored",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub seven: CandidateVerdict,
    pub eight: CandidateVerdict,
    pub nine: CandidateVerdict,
}

impl Verdict {
    pub fn get(&self, kind: Candidate) -> &CandidateVerdict {
        match kind {
            Candidate::Coherent => &self.seven,
            Candidate::Linear => &self.eight,
            Candidate::Collapsed => &self.nine,
        }
    }

    /// Labels such as `seven_rejected_dynamics`, in candidate order.
    pub fn chain(&self) -> Vec<String> {
        Candidate::ALL.iter().map(|&k| format!("{}_{}", k.label(), self.get(k).as_str())).collect()
    }
}

/// Probability mass of outcome `outcome` at a classical node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalPoint {
    pub t: f64,
    pub outcome: usize,
    pub q: f64,
    pub p: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCheck {
    pub candidate: Candidate,
    pub t: f64,
    pub steps: usize,
    pub relative_error: f64,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub mode: Mode,
    pub dim: usize,
    pub cell_area: f64,
    pub outcome_weights: Vec<f64>,
    pub times: Vec<f64>,
    /// One series per candidate, in the order `seven`, `eight`, `nine`.
    pub series: Vec<CandidateSeries>,
    pub verdict: Verdict,
    /// Outcome-resolved pointer distribution of the mode's candidate.
    pub marginals: Vec<MarginalPoint>,
    /// `(t, entropy)` of the collapse evolution; the first point is the pure
    /// state just before the measurement. Only filled in collapse mode.
    pub entropy_arrow: Option<Vec<(f64, f64)>>,
    pub grid_check: Option<GridCheck>,
    pub warnings: Vec<String>,
}

impl ScenarioReport {
    pub fn series(&self, kind: Candidate) -> Option<&CandidateSeries> {
        self.series.iter().find(|s| s.candidate == kind)
    }
}

fn entropy_or_none<S: HybridOperator>(state: &S) -> Result<Option<f64>, HybridError> {
    match von_neumann_entropy(state) {
        Ok(s) => Ok(Some(s)),
        Err(HybridError::NotPositive(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn marginals(state: &HybridDyadState, t: f64) -> Vec<MarginalPoint> {
    let nb = state.node_blocks();
    let area = nb.grid().cell_area();
    let mut out = Vec::new();
    for (&(a, b), m) in nb.blocks() {
        if a != b {
            continue;
        }
        let z = nb.grid().point(a);
        for i in 0..nb.dim() {
            let weight = m[(i, i)].re * area;
            if weight != 0.0 {
                out.push(MarginalPoint { t, outcome: i, q: z.q, p: z.p, weight });
            }
        }
    }
    out
}

fn sample(cfg: &ScenarioConfig, kind: Candidate, t: f64) -> Result<(Sample, HybridDyadState), HybridError> {
    let state = make_candidate(kind, &cfg.spec, &cfg.grid, &cfg.amplitudes, cfg.pointer, t)?;
    let residual = if t > 0.0 {
        let plus = advance_candidate(kind, &cfg.spec, &state, cfg.dt)?;
        let minus = advance_candidate(kind, &cfg.spec, &state, -cfg.dt)?;
        Some(residual_norm_of_states(&cfg.spec, &minus, &state, &plus, cfg.dt)?)
    } else {
        None
    };
    let sample = Sample {
        t,
        residual,
        purity_defect: hybrid_purity_defect(&state)?,
        min_eigenvalue: min_eigenvalue(&state)?,
        entropy: entropy_or_none(&state)?,
        probabilities: outcome_probabilities(&state)?,
    };
    Ok((sample, state))
}

fn judge(series: &CandidateSeries, cfg: &ScenarioConfig) -> CandidateVerdict {
    if let Some(e) = &series.error {
        return CandidateVerdict::Errored(e.clone());
    }
    let th = &cfg.thresholds;
    let s = &series.samples;
    if s.iter().any(|x| x.residual.is_some_and(|r| !(r <= th.residual))) {
        return CandidateVerdict::RejectedDynamics;
    }
    let floor = -th.positivity / cfg.grid.cell_area();
    if s.iter().any(|x| !(x.min_eigenvalue >= floor)) {
        return CandidateVerdict::RejectedPositivity;
    }
    let weights = cfg.outcome_weights();
    let off = |x: &Sample| x.probabilities.iter().zip(&weights).any(|(p, w)| !((p - w).abs() <= th.probability));
    if s.iter().any(off) {
        return CandidateVerdict::RejectedProbabilities;
    }
    CandidateVerdict::Accepted
}

/// Advisory checks on the pointer motion: closed orbits that bring the
/// pointer back to its start, excursions off a clamped grid, and a coupling
/// that does not move the pointer at all.
pub fn pointer_motion_warnings(cfg: &ScenarioConfig) -> Vec<String> {
    let spec = &cfg.spec;
    let grid = &cfg.grid;
    let mut warnings = Vec::new();
    if !spec.is_interacting() {
        warnings.push("the coupling vanishes; no measurement takes place".to_string());
    }
    let cell = grid.dq().max(grid.dp());
    let mut seen: Vec<f64> = Vec::new();
    for i in 0..spec.dim() {
        let v = spec.v()[i];
        if seen.contains(&v) {
            continue;
        }
        seen.push(v);
        let h = spec.pair_hamiltonian(i, i);
        let z0 = cfg.pointer;
        let mut left = false;
        let mut returned = None;
        Characteristics::new(&h).flow(z0, cfg.t_final, |t, z| {
            let d = z.distance(&z0);
            if d > 2.0 * cell {
                left = true;
            } else if left && d <= cell && returned.is_none() {
                returned = Some(t);
            }
        });
        if let Some(t) = returned {
            warnings.push(format!("pointer orbit for v = {v} returns to its start at t = {t:.3}"));
        }
        if characteristics_on_grid(&h, z0, cfg.t_final, grid).exited_bounds {
            warnings.push(format!("pointer trajectory for v = {v} leaves the clamped grid"));
        }
    }
    warnings
}

/// Grid-engine evolution of the mode's initial state compared with the
/// band-limited projection of its dyad form at `t_final`.
pub fn engine_agreement(cfg: &ScenarioConfig) -> Result<Option<GridCheck>, ScenarioError> {
    cfg.validate()?;
    let kind = match cfg.mode {
        Mode::Trial => return Ok(None),
        m => m.candidate(),
    };
    let spec = &cfg.spec;
    let start = make_candidate(kind, spec, &cfg.grid, &cfg.amplitudes, cfg.pointer, 0.0)?;
    let steps = cfg.grid_steps();
    let evolved = evolve_hybrid_grid(spec, &band_limited_projection(&start)?, cfg.t_final, steps)?.filter_nyquist();
    let end = make_candidate(kind, spec, &cfg.grid, &cfg.amplitudes, cfg.pointer, cfg.t_final)?;
    let target = band_limited_projection(&end)?.filter_nyquist();
    let relative_error = evolved.sub(&target)?.frobenius_norm() / target.frobenius_norm();
    Ok(Some(GridCheck {
        candidate: kind,
        t: cfg.t_final,
        steps,
        relative_error,
        agrees: relative_error <= ENGINE_AGREEMENT_TOL,
    }))
}

/// Negative-probability witness for candidate `eight` at one of its
/// coherence points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityWitness {
    pub t: f64,
    /// Pair `(i, j)` whose coherence sits alone at `point`.
    pub pair: (usize, usize),
    pub point: PhasePoint,
    pub node: usize,
    /// Probability of finding the pointer at `node`, any quantum state.
    pub pointer_event: f64,
    /// Probability of `(|psi_i> + e^{i theta}|psi_j>)/sqrt(2)` at `node` with
    /// `theta` chosen against the phase of `c_ij`; equals `-|c_ij|` when no
    /// diagonal term shares the node.
    pub phase_event: f64,
}

/// Builds the witness on the first coherence between distinct eigenvalues of
/// candidate `eight` at time `t`, or `None` when there is no such coherence.
pub fn positivity_witness(cfg: &ScenarioConfig, t: f64) -> Result<Option<PositivityWitness>, ScenarioError> {
    cfg.validate()?;
    let n = cfg.spec.dim();
    let v = cfg.spec.v();
    let state = make_candidate(Candidate::Linear, &cfg.spec, &cfg.grid, &cfg.amplitudes, cfg.pointer, t)?;
    let Some(term) = state.terms().iter().find(|d| d.i < d.j && v[d.i] != v[d.j]) else {
        return Ok(None);
    };
    let node = cfg.grid.snap(term.ket);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let theta = std::f64::consts::PI - term.coeff.arg();
    let mut psi = vec![Complex64::new(0.0, 0.0); n];
    psi[term.i] = Complex64::new(s, 0.0);
    psi[term.j] = Complex64::from_polar(s, theta);
    let phase = Event::new(QuantumOperator::projector(&psi), NodeSet::Nodes([node].into()))?;
    Ok(Some(PositivityWitness {
        t,
        pair: (term.i, term.j),
        point: term.ket,
        node,
        pointer_event: event_probability(&state, &Event::at_node(n, node))?,
        phase_event: event_probability(&state, &phase)?,
    }))
}

/// Entropy of the collapse evolution: the pure initial state at `t = 0`,
/// then the collapsed state from `t = 0+` on at every sample time.
pub fn entropy_arrow(cfg: &ScenarioConfig) -> Result<Vec<(f64, f64)>, ScenarioError> {
    cfg.validate()?;
    let before = von_neumann_entropy(&initial_state(&cfg.grid, &cfg.amplitudes, cfg.pointer)?)?;
    let mut out = vec![(0.0, before)];
    for t in cfg.times() {
        let state = make_candidate(Candidate::Collapsed, &cfg.spec, &cfg.grid, &cfg.amplitudes, cfg.pointer, t)?;
        out.push((t, von_neumann_entropy(&state)?));
    }
    Ok(out)
}

/// Evaluates every candidate at every sample time and reaches a verdict.
/// Engine failures of a single candidate are recorded in the report; only
/// an invalid configuration or an unstable time step abort the run.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioReport, ScenarioError> {
    cfg.validate()?;
    if cfg.grid_check && cfg.mode != Mode::Trial {
        check_time_step(&cfg.spec, &cfg.grid, cfg.dt)?;
    }
    let times = cfg.times();
    let jobs: Vec<(Candidate, f64)> = Candidate::ALL.iter().flat_map(|&k| times.iter().map(move |&t| (k, t))).collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(kind, t)| {
            sample(cfg, kind, t).map(|(s, state)| {
                let m = if kind == cfg.mode.candidate() { marginals(&state, t) } else { Vec::new() };
                (s, m)
            })
        })
        .collect();

    let mut series = Vec::new();
    let mut pointer = Vec::new();
    let mut results = results.into_iter();
    for &kind in &Candidate::ALL {
        let mut samples = Vec::new();
        let mut error = None;
        for r in results.by_ref().take(times.len()) {
            match r {
                Ok((s, m)) if error.is_none() => {
                    samples.push(s);
                    pointer.extend(m);
                }
                Ok(_) => {}
                Err(e) => {
                    if error.is_none() {
                        error = Some(e.to_string());
                    }
                }
            }
        }
        series.push(CandidateSeries { candidate: kind, samples, error });
    }
    let verdict =
        Verdict { seven: judge(&series[0], cfg), eight: judge(&series[1], cfg), nine: judge(&series[2], cfg) };

    let mut warnings = pointer_motion_warnings(cfg);
    let entropy_arrow = if cfg.mode == Mode::Collapse && series[2].error.is_none() {
        let before = entropy_or_none(&initial_state(&cfg.grid, &cfg.amplitudes, cfg.pointer)?)?;
        let after: Option<Vec<(f64, f64)>> = series[2].samples.iter().map(|s| s.entropy.map(|e| (s.t, e))).collect();
        before.zip(after).map(|(b, a)| std::iter::once((0.0, b)).chain(a).collect())
    } else {
        None
    };
    let grid_check = if cfg.grid_check {
        match engine_agreement(cfg) {
            Ok(check) => check,
            Err(ScenarioError::Hybrid(e)) => {
                warnings.push(format!("grid cross-check failed: {e}"));
                None
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    if let Some(check) = grid_check.as_ref().filter(|c| !c.agrees) {
        warnings.push(format!(
            "grid engine and dyad engine differ by {:.3e} (relative) at t = {}",
            check.relative_error, check.t
        ));
    }

    Ok(ScenarioReport {
        mode: cfg.mode,
        dim: cfg.spec.dim(),
        cell_area: cfg.grid.cell_area(),
        outcome_weights: cfg.outcome_weights(),
        times,
        series,
        verdict,
        marginals: pointer,
        entropy_arrow,
        grid_check,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(n: usize) -> ScenarioConfig {
        ScenarioConfig { n_samples: 5, grid_check: false, ..ScenarioConfig::reference(n).unwrap() }
    }

    #[test]
    fn reference_verdict() {
        let report = run_scenario(&quick(32)).unwrap();
        assert_eq!(report.verdict.chain(), ["seven_rejected_dynamics", "eight_rejected_positivity", "nine_accepted"]);
        let nine = report.series(Candidate::Collapsed).unwrap();
        for s in &nine.samples {
            assert!((s.entropy.unwrap() - 2f64.ln()).abs() < 1e-10);
        }
        let eight = report.series(Candidate::Linear).unwrap();
        assert!(eight.samples.last().unwrap().entropy.is_none());
        assert!(report.entropy_arrow.as_ref().unwrap()[0].1.abs() < 1e-12);
    }

    #[test]
    fn witness_goes_negative() {
        let cfg = quick(64);
        let w = positivity_witness(&cfg, 1.0).unwrap().unwrap();
        assert_eq!(w.pair, (0, 1));
        assert!(w.pointer_event.abs() < 1e-12);
        assert!((w.phase_event + 0.5).abs() < 1e-12, "{}", w.phase_event);
        let single = ScenarioConfig { amplitudes: vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0)], ..cfg };
        assert!(positivity_witness(&single, 1.0).unwrap().is_none());
    }

    #[test]
    fn eigenstate_is_accepted_everywhere() {
        let cfg = ScenarioConfig { amplitudes: vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], ..quick(32) };
        let report = run_scenario(&cfg).unwrap();
        for k in Candidate::ALL {
            assert_eq!(*report.verdict.get(k), CandidateVerdict::Accepted, "{k}");
        }
        assert!(report.entropy_arrow.unwrap().iter().all(|&(_, s)| s.abs() < 1e-12));
    }

    #[test]
    fn no_coupling_keeps_the_product_pure() {
        let mut cfg = quick(32);
        cfg.spec = build_measurement_hamiltonian(
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            PolynomialObservable::zero(),
            PolynomialObservable::position(),
        )
        .unwrap();
        let report = run_scenario(&cfg).unwrap();
        for series in &report.series {
            for s in &series.samples {
                assert!(s.purity_defect < 1e-10, "{} {}", series.candidate, s.purity_defect);
            }
        }
        assert!(report.warnings.iter().any(|w| w.contains("coupling vanishes")));
    }

    #[test]
    fn collapse_marginals_separate() {
        let report = run_scenario(&quick(64)).unwrap();
        let last: Vec<_> = report.marginals.iter().filter(|m| m.t == 1.0).collect();
        assert_eq!(last.len(), 2);
        assert_ne!((last[0].q, last[0].p), (last[1].q, last[1].p));
        assert!(last.iter().all(|m| (m.weight - 0.5).abs() < 1e-12));
    }

    #[test]
    fn invalid_configs_name_their_field() {
        let mut cfg = quick(32);
        cfg.amplitudes = vec![Complex64::new(1.0, 0.0); 2];
        match run_scenario(&cfg) {
            Err(ScenarioError::Config { field, .. }) => assert_eq!(field, "amplitudes"),
            other => panic!("{other:?}"),
        }
        let cfg = ScenarioConfig { pointer: PhasePoint::new(9.0, 0.0), ..quick(32) };
        assert!(matches!(run_scenario(&cfg), Err(ScenarioError::Config { field: "pointer", .. })));
    }

    #[test]
    fn oversized_dt_is_unstable() {
        let cfg = ScenarioConfig { dt: 0.5, grid_check: true, ..quick(32) };
        match run_scenario(&cfg) {
            Err(ScenarioError::Hybrid(HybridError::PhaseSpace(crate::phasespace::PhaseSpaceError::Unstable {
                suggested_dt,
                ..
            }))) => assert!(suggested_dt < 0.5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn periodic_pointer_is_flagged() {
        let mut cfg = quick(64);
        cfg.spec = build_measurement_hamiltonian(
            vec![0.0, 0.0],
            vec![1.0, -1.0],
            "0.5*p^2 + 0.5*q^2".parse().unwrap(),
            PolynomialObservable::zero(),
        )
        .unwrap();
        cfg.pointer = PhasePoint::new(1.0, 0.0);
        cfg.t_final = 7.0;
        assert!(pointer_motion_warnings(&cfg).iter().any(|w| w.contains("returns")));
    }
}
