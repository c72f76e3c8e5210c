//! TOML run configuration.
//!
//! ```toml
//! [system]
//! hbar = 1.0
//! h = [0.0, 0.0]
//! v = [1.0, -1.0]
//! h_cm = "0"
//! v_cm = "q"
//!
//! [state]
//! amplitudes = [0.7071067811865476, "0.7071067811865476+0i"]
//! pointer = [0.0, 0.0]
//!
//! [grid]
//! q_range = [-4.0, 4.0]
//! p_range = [-4.0, 4.0]
//! n_q = 64
//! n_p = 64
//! boundary = "periodic"
//! scheme = "spectral"
//!
//! [run]
//! mode = "collapse"
//! t_final = 1.0
//! dt = 1e-3
//! n_samples = 11
//! grid_check = true
//!
//! [thresholds]
//! residual = 0.1
//! positivity = 1e-8
//! probability = 1e-10
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Amplitudes are numbers or complex strings such as `"0.5-0.5i"`. Only
//! `[system]`, `[state]` and `[grid]` are required.

use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hybrid::HybridError;
use crate::phasespace::{Boundary, PhasePoint, PhaseSpaceGrid, PolynomialObservable, Scheme};
use crate::scenario::{build_measurement_hamiltonian, Mode, ScenarioConfig, ScenarioError, Thresholds};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    /// Syntax or type error; the message carries line and column.
    #[error("{0}")]
    Parse(String),
    #[error("invalid `{field}`: {message}")]
    Field { field: String, message: String },
}

impl ConfigError {
    fn field(field: &str, message: impl ToString) -> Self {
        ConfigError::Field { field: field.to_string(), message: message.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Amplitude {
    Real(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSection {
    #[serde(default = "one")]
    hbar: f64,
    h: Vec<f64>,
    v: Vec<f64>,
    h_cm: String,
    v_cm: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateSection {
    amplitudes: Vec<Amplitude>,
    pointer: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    q_range: [f64; 2],
    p_range: [f64; 2],
    n_q: usize,
    n_p: usize,
    #[serde(default = "periodic")]
    boundary: Boundary,
    scheme: Option<Scheme>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    #[serde(default = "collapse")]
    mode: Mode,
    #[serde(default = "one")]
    t_final: f64,
    #[serde(default = "default_dt")]
    dt: f64,
    #[serde(default = "default_samples")]
    n_samples: usize,
    #[serde(default = "yes")]
    grid_check: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { mode: collapse(), t_final: one(), dt: default_dt(), n_samples: default_samples(), grid_check: yes() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThresholdSection {
    #[serde(default = "default_residual")]
    residual: f64,
    #[serde(default = "default_positivity")]
    positivity: f64,
    #[serde(default = "default_probability")]
    probability: f64,
}

impl Default for ThresholdSection {
    fn default() -> Self {
        let t = Thresholds::default();
        Self { residual: t.residual, positivity: t.positivity, probability: t.probability }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn periodic() -> Boundary {
    Boundary::Periodic
}
fn collapse() -> Mode {
    Mode::Collapse
}
fn default_dt() -> f64 {
    1e-3
}
fn default_samples() -> usize {
    11
}
fn default_residual() -> f64 {
    Thresholds::default().residual
}
fn default_positivity() -> f64 {
    Thresholds::default().positivity
}
fn default_probability() -> f64 {
    Thresholds::default().probability
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    system: SystemSection,
    state: StateSection,
    grid: GridSection,
    #[serde(default)]
    run: RunSection,
    #[serde(default)]
    thresholds: ThresholdSection,
    #[serde(default)]
    output: OutputSection,
}

/// A validated configuration together with its normalized text form.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    raw: RawConfig,
    scenario: ScenarioConfig,
}

fn parse_amplitude(a: &Amplitude) -> Result<Complex64, String> {
    match a {
        Amplitude::Real(x) => Ok(Complex64::new(*x, 0.0)),
        Amplitude::Text(s) => s.trim().parse().map_err(|_| format!("cannot read `{s}` as a complex number")),
    }
}

fn poly(field: &str, text: &str) -> Result<PolynomialObservable, ConfigError> {
    text.parse().map_err(|e| ConfigError::field(field, e))
}

fn scenario_field(e: ScenarioError) -> ConfigError {
    match e {
        ScenarioError::Config { field, message } => {
            let section = match field {
                "amplitudes" | "pointer" => "state",
                "residual" | "positivity" | "probability" => "thresholds",
                _ => "run",
            };
            ConfigError::field(&format!("{section}.{field}"), message)
        }
        ScenarioError::Hybrid(e) => ConfigError::field("system", e),
    }
}

impl RawConfig {
    fn build(&self) -> Result<ScenarioConfig, ConfigError> {
        let s = &self.system;
        let spec = build_measurement_hamiltonian(
            s.h.clone(),
            s.v.clone(),
            poly("system.h_cm", &s.h_cm)?,
            poly("system.v_cm", &s.v_cm)?,
        )
        .map_err(|e| match e {
            HybridError::DimensionMismatch { .. } => ConfigError::field("system.v", e),
            e => ConfigError::field("system.h", e),
        })?
        .with_hbar(s.hbar)
        .map_err(|e| ConfigError::field("system.hbar", e))?;

        let amplitudes = self
            .state
            .amplitudes
            .iter()
            .map(parse_amplitude)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|m| ConfigError::field("state.amplitudes", m))?;

        let g = &self.grid;
        let mut grid =
            PhaseSpaceGrid::new((g.q_range[0], g.q_range[1]), (g.p_range[0], g.p_range[1]), g.n_q, g.n_p, g.boundary)
                .map_err(|e| ConfigError::field("grid", e))?;
        if let Some(scheme) = g.scheme {
            grid = grid.with_scheme(scheme).map_err(|e| ConfigError::field("grid.scheme", e))?;
        }

        let t = &self.thresholds;
        let cfg = ScenarioConfig {
            spec,
            amplitudes,
            pointer: PhasePoint::new(self.state.pointer[0], self.state.pointer[1]),
            grid,
            t_final: self.run.t_final,
            n_samples: self.run.n_samples,
            mode: self.run.mode,
            dt: self.run.dt,
            thresholds: Thresholds { residual: t.residual, positivity: t.positivity, probability: t.probability },
            grid_check: self.run.grid_check,
        };
        cfg.validate().map_err(scenario_field)?;
        Ok(cfg)
    }

    /// Canonical spelling of every value, so that printing is idempotent.
    fn normalized(mut self, cfg: &ScenarioConfig) -> Self {
        self.system.h_cm = cfg.spec.h_cm().to_string();
        self.system.v_cm = cfg.spec.v_cm().to_string();
        self.state.amplitudes = cfg.amplitudes.iter().map(|c| Amplitude::Text(c.to_string())).collect();
        self.grid.scheme = Some(cfg.grid.scheme());
        self
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let scenario = raw.build()?;
        Ok(Self { raw: raw.normalized(&scenario), scenario })
    }

    pub fn scenario(&self) -> &ScenarioConfig {
        &self.scenario
    }

    pub fn output_dir(&self) -> Option<&std::path::Path> {
        self.raw.output.dir.as_deref()
    }

    /// Normalized TOML text; parsing it gives back the same configuration.
    pub fn to_text(&self) -> String {
        toml::to_string(&self.raw).expect("configuration is representable in TOML")
    }

    /// The normalized configuration as JSON, for report headers.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(&self.raw).expect("configuration is representable in JSON")
    }

    pub fn with_mode(mut self, mode: Mode) -> Result<Self, ConfigError> {
        self.raw.run.mode = mode;
        Self::from_raw(self.raw)
    }

    pub fn with_grid_size(mut self, n_q: usize, n_p: usize) -> Result<Self, ConfigError> {
        self.raw.grid.n_q = n_q;
        self.raw.grid.n_p = n_p;
        Self::from_raw(self.raw)
    }

    pub fn with_dt(mut self, dt: f64) -> Result<Self, ConfigError> {
        self.raw.run.dt = dt;
        Self::from_raw(self.raw)
    }

    pub fn with_output_dir(mut self, dir: PathBuf) -> Self {
        self.raw.output.dir = Some(dir);
        self
    }
}

impl std::str::FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: &str = include_str!("../../reference.cfg");

    #[test]
    fn reference_file_parses() {
        let cfg = RunConfig::parse(REFERENCE).unwrap();
        let s = cfg.scenario();
        assert_eq!(s.grid.n_q(), 64);
        assert_eq!(s.spec.v(), &[1.0, -1.0]);
        assert_eq!(s.mode, Mode::Collapse);
        assert!(s.spec.h_cm().is_zero());
    }

    #[test]
    fn printing_is_idempotent() {
        let first = RunConfig::parse(REFERENCE).unwrap().to_text();
        let again = RunConfig::parse(&first).unwrap();
        assert_eq!(again.to_text(), first);
        assert_eq!(again.scenario(), RunConfig::parse(REFERENCE).unwrap().scenario());
    }

    #[test]
    fn unnormalized_amplitudes_name_the_field() {
        let text = REFERENCE.replace("amplitudes = [0.7071067811865476, 0.7071067811865476]", "amplitudes = [1, 1]");
        assert_ne!(text, REFERENCE);
        match RunConfig::parse(&text) {
            Err(ConfigError::Field { field, .. }) => assert_eq!(field, "state.amplitudes"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn complex_amplitudes_and_two_term_potential() {
        let text = REFERENCE
            .replace(
                "amplitudes = [0.7071067811865476, 0.7071067811865476]",
                r#"amplitudes = ["0.5+0.5i", "0.5-0.5i"]"#,
            )
            .replace(r#"v_cm = "q""#, r#"v_cm = "0.5*q^2 + p""#);
        let cfg = RunConfig::parse(&text).unwrap();
        assert_eq!(cfg.scenario().amplitudes[1], Complex64::new(0.5, -0.5));
        assert_eq!(cfg.scenario().spec.v_cm().terms().len(), 2);
    }

    #[test]
    fn unknown_keys_and_syntax_errors_are_located() {
        let text = REFERENCE.replace("[run]", "[run]\ncolour = 3");
        match RunConfig::parse(&text) {
            Err(ConfigError::Parse(m)) => assert!(m.contains("colour") && m.contains("line"), "{m}"),
            other => panic!("{other:?}"),
        }
        match RunConfig::parse("[system\n") {
            Err(ConfigError::Parse(m)) => assert!(m.contains("line 1"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn semantic_errors_name_fields() {
        let cases = [
            (REFERENCE.replace(r#"v_cm = "q""#, r#"v_cm = "q +""#), "system.v_cm"),
            (REFERENCE.replace("v = [1.0, -1.0]", "v = [1.0]"), "system.v"),
            (REFERENCE.replace("pointer = [0.0, 0.0]", "pointer = [5.0, 0.0]"), "state.pointer"),
            (REFERENCE.replace("n_samples = 11", "n_samples = 1"), "run.n_samples"),
            (REFERENCE.replace("boundary = \"periodic\"", "boundary = \"clamped\""), "grid.scheme"),
        ];
        for (text, want) in cases {
            match RunConfig::parse(&text) {
                Err(ConfigError::Field { field, .. }) => assert_eq!(field, want),
                other => panic!("{want}: {other:?}"),
            }
        }
    }
}
