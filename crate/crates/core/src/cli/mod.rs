//! Command-line entry points: configuration, dispatch and output files.
//!
//! Exit codes: 0 on success (rejected candidates are a result, not a
//! failure), 1 on output errors, 2 on usage or configuration errors, 3 on
//! numerical failures such as an unstable time step.

mod config;
mod output;

use std::ffi::OsString;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use thiserror::Error;

pub use config::{ConfigError, RunConfig};
pub use output::{
    entropy_csv, format_float, marginals_csv, report_json, timeseries_csv, timeseries_header, write_scenario,
    OutputError,
};

use crate::hybrid::{
    band_limited_projection, evolve_hybrid_grid, hybrid_purity_defect, make_candidate, min_eigenvalue,
    outcome_probabilities, von_neumann_entropy, Candidate, HybridError,
};
use crate::phasespace::{
    characteristics_evolve, classical_expectation, liouville_evolve, ClassicalOperator, PhaseSpaceError,
    PolynomialObservable,
};
use crate::quantum::{von_neumann_evolve, QuantumError, QuantumOperator};
use crate::scenario::{positivity_witness, run_scenario, Mode, ScenarioConfig, ScenarioError};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "HYBRIDLAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "hybridlab", version, about = "Hybrid quantum-classical measurement dynamics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Run all candidates and write report.json, timeseries.csv and plotdata/.
    Scenario(RunArgs),
    /// Liouville evolution of the pointer alone under H_cm.
    EvolveClassical(RunArgs),
    /// Von Neumann evolution of the initial quantum state under H_qm.
    EvolveQuantum(RunArgs),
    /// Grid evolution of the hybrid state selected by the mode.
    EvolveHybrid(RunArgs),
    /// Diagnostics of every candidate at t_final.
    Diagnose(RunArgs),
}

impl Command {
    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Scenario(a)
            | Command::EvolveClassical(a)
            | Command::EvolveQuantum(a)
            | Command::EvolveHybrid(a)
            | Command::Diagnose(a) => a,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Configuration file (same as --config).
    #[arg(value_name = "CONFIG")]
    pub config_path: Option<PathBuf>,
    /// Output directory (same as --out).
    #[arg(value_name = "OUT")]
    pub out_path: Option<PathBuf>,
    #[arg(long, conflicts_with = "config_path")]
    pub config: Option<PathBuf>,
    #[arg(long, conflicts_with = "out_path")]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = clap::builder::ValueParser::new(parse_mode))]
    pub mode: Option<Mode>,
    /// Grid size, e.g. 128x128.
    #[arg(long, value_name = "NxM", value_parser = clap::builder::ValueParser::new(parse_grid))]
    pub grid: Option<(usize, usize)>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Reserved; the dynamics is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NxM, got `{s}`"))?;
    let n = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("expected NxM, got `{s}`"));
    Ok((n(a)?, n(b)?))
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {}: {source}", .path.display())]
    Read { path: PathBuf, source: io::Error },
    #[error("{}: {source}", .path.display())]
    Config { path: PathBuf, source: ConfigError },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Output(#[from] OutputError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Output(_) => 1,
            CliError::Usage(_) | CliError::Read { .. } | CliError::Config { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<HybridError> for CliError {
    fn from(e: HybridError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<PhaseSpaceError> for CliError {
    fn from(e: PhaseSpaceError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<QuantumError> for CliError {
    fn from(e: QuantumError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Config { .. } => CliError::Usage(e.to_string()),
            ScenarioError::Hybrid(e) => e.into(),
        }
    }
}

/// What a command produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
    pub warnings: Vec<String>,
}

/// Reads the configuration named by `args` and applies the flag overrides.
pub fn load_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let path = args
        .config
        .as_ref()
        .or(args.config_path.as_ref())
        .ok_or_else(|| CliError::Usage("no configuration file given".into()))?;
    let text = fs::read_to_string(path).map_err(|source| CliError::Read { path: path.clone(), source })?;
    let located = |source| CliError::Config { path: path.clone(), source };
    let mut cfg = RunConfig::parse(&text).map_err(located)?;
    if let Some(mode) = args.mode {
        cfg = cfg.with_mode(mode).map_err(located)?;
    }
    if let Some((n_q, n_p)) = args.grid {
        cfg = cfg.with_grid_size(n_q, n_p).map_err(located)?;
    }
    if let Some(dt) = args.dt {
        cfg = cfg.with_dt(dt).map_err(located)?;
    }
    let out = args.out.as_ref().or(args.out_path.as_ref());
    if let Some(dir) = out {
        cfg = cfg.with_output_dir(dir.clone());
    }
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir().map_or_else(|| PathBuf::from("out"), Path::to_path_buf)
}

fn steps_for(span: f64, dt: f64) -> usize {
    ((span / dt).round() as usize).max(1)
}

fn scenario(cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    let report = run_scenario(cfg.scenario())?;
    let files = write_scenario(&report, cfg, dir)?;
    let mut summary = vec![format!("verdict: {}", report.verdict.chain().join(", "))];
    if let Some(check) = &report.grid_check {
        summary.push(format!("grid engine vs dyad engine: relative error {:.3e}", check.relative_error));
    }
    Ok(Outcome { files, summary, warnings: report.warnings })
}

fn evolve_classical(cfg: &ScenarioConfig, dir: &Path) -> Result<Outcome, CliError> {
    let h = cfg.spec.h_cm();
    let mut rho = ClassicalOperator::delta(cfg.grid, cfg.pointer)?;
    let q = PolynomialObservable::position();
    let p = PolynomialObservable::momentum();
    let mut rows = Vec::new();
    let mut last = 0.0;
    for t in cfg.times() {
        if t > last {
            rho = liouville_evolve(h, &rho, t - last, steps_for(t - last, cfg.dt))?;
            last = t;
        }
        let z = characteristics_evolve(h, cfg.pointer, t);
        rows.push(vec![
            format_float(t),
            format_float(rho.trace().re),
            format_float(classical_expectation(&q, &rho)?),
            format_float(classical_expectation(&p, &rho)?),
            format_float(z.q),
            format_float(z.p),
        ]);
    }
    let header = ["t", "trace", "mean_q", "mean_p", "characteristic_q", "characteristic_p"];
    let series = csv_text(&header, rows);
    let density_rows = cfg
        .grid
        .points()
        .zip(rho.diag())
        .map(|(z, w)| vec![format_float(z.q), format_float(z.p), format_float(w.re)])
        .collect();
    let density = csv_text(&["q", "p", "density"], density_rows);
    write_all_bytes(dir, vec![("classical.csv", series), ("plotdata/classical_density.csv", density)])
}

fn evolve_quantum(cfg: &ScenarioConfig, dir: &Path) -> Result<Outcome, CliError> {
    let n = cfg.spec.dim();
    let rho0 = QuantumOperator::projector(&cfg.amplitudes);
    let h = cfg.spec.quantum_hamiltonian();
    let mut header = vec!["t".to_string(), "trace".to_string(), "purity".to_string()];
    for i in 1..=n {
        for j in 1..=n {
            header.push(format!("rho_{i}_{j}_re"));
            header.push(format!("rho_{i}_{j}_im"));
        }
    }
    let mut rows = Vec::new();
    for t in cfg.times() {
        let rho = von_neumann_evolve(&h, &rho0, t, cfg.spec.hbar())?;
        let mut row = vec![format_float(t), format_float(rho.trace().re), format_float(rho.purity())];
        for i in 0..n {
            for j in 0..n {
                let x = rho.get(i, j);
                row.push(format_float(x.re));
                row.push(format_float(x.im));
            }
        }
        rows.push(row);
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_all_bytes(dir, vec![("quantum.csv", csv_text(&header, rows))])
}

fn evolve_hybrid(cfg: &ScenarioConfig, dir: &Path) -> Result<Outcome, CliError> {
    let kind = match cfg.mode {
        Mode::Collapse => Candidate::Collapsed,
        Mode::Linear | Mode::Trial => Candidate::Linear,
    };
    let start = make_candidate(kind, &cfg.spec, &cfg.grid, &cfg.amplitudes, cfg.pointer, 0.0)?;
    let mut state = band_limited_projection(&start)?;
    let mut rows = Vec::new();
    let mut last = 0.0;
    for t in cfg.times() {
        if t > last {
            state = evolve_hybrid_grid(&cfg.spec, &state, t - last, steps_for(t - last, cfg.dt))?;
            last = t;
        }
        let exact =
            band_limited_projection(&make_candidate(kind, &cfg.spec, &cfg.grid, &cfg.amplitudes, cfg.pointer, t)?)?
                .filter_nyquist();
        let err = state.filter_nyquist().sub(&exact)?.frobenius_norm() / exact.frobenius_norm();
        let mut row = vec![
            format_float(t),
            format_float(state.trace().re),
            format_float(min_eigenvalue(&state)?),
            format_float(err),
        ];
        row.extend(outcome_probabilities(&state)?.into_iter().map(format_float));
        rows.push(row);
    }
    let mut header = vec!["t".to_string(), "trace".into(), "min_eigenvalue".into(), "engine_error".into()];
    header.extend((1..=cfg.spec.dim()).map(|i| format!("prob_outcome_{i}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut outcome = write_all_bytes(dir, vec![("hybrid.csv", csv_text(&header, rows))])?;
    outcome.summary.push(format!("evolved the {} state on the grid", kind.label()));
    Ok(outcome)
}

fn diagnose(cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    let s = cfg.scenario();
    let t = s.t_final;
    let mut candidates = serde_json::Map::new();
    for kind in Candidate::ALL {
        let state = make_candidate(kind, &s.spec, &s.grid, &s.amplitudes, s.pointer, t)?;
        let entropy = match von_neumann_entropy(&state) {
            Ok(e) => Some(e),
            Err(HybridError::NotPositive(_)) => None,
            Err(e) => return Err(e.into()),
        };
        let min = min_eigenvalue(&state)?;
        candidates.insert(
            kind.label().to_string(),
            json!({
                "terms": state.terms().len(),
                "trace": state.trace().re,
                "purity_defect": hybrid_purity_defect(&state)?,
                "min_eigenvalue": min,
                "min_eigenvalue_times_cell_area": min * s.grid.cell_area(),
                "entropy": entropy,
                "probabilities": outcome_probabilities(&state)?,
            }),
        );
    }
    let value = json!({
        "tool": "hybridlab",
        "version": crate::VERSION,
        "t": t,
        "config": cfg.echo(),
        "candidates": candidates,
        "positivity_witness": positivity_witness(s, t)?,
    });
    write_all_bytes(dir, vec![("diagnose.json", output::json_bytes(&value))])
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Vec<u8> {
    output::csv_bytes(header.iter().map(|h| h.to_string()).collect(), rows)
}

fn write_all_bytes(dir: &Path, files: Vec<(&str, Vec<u8>)>) -> Result<Outcome, CliError> {
    let mut outcome = Outcome::default();
    for (name, bytes) in files {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            output::create_dir(parent)?;
        }
        output::write_file(&path, &bytes)?;
        outcome.files.push(path);
    }
    Ok(outcome)
}

/// Runs one command with an already loaded configuration.
pub fn execute(command: &Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let dir = out_dir(cfg);
    match command {
        Command::Scenario(_) => scenario(cfg, &dir),
        Command::EvolveClassical(_) => evolve_classical(cfg.scenario(), &dir),
        Command::EvolveQuantum(_) => evolve_quantum(cfg.scenario(), &dir),
        Command::EvolveHybrid(_) => evolve_hybrid(cfg.scenario(), &dir),
        Command::Diagnose(_) => diagnose(cfg, &dir),
    }
}

/// Loads the configuration and runs `command`, on a pool of
/// `HYBRIDLAB_THREADS` workers when that variable is set.
pub fn run(command: &Command) -> Result<Outcome, CliError> {
    let cfg = load_config(command.args())?;
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?;
            pool.install(|| execute(command, &cfg))
        }
        Err(_) => execute(command, &cfg),
    }
}

/// Parses `args` (program name first), runs the command, reports on
/// stdout/stderr and returns the exit code.
pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli.command) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_flag_parses() {
        assert_eq!(parse_grid("128x64"), Ok((128, 64)));
        assert!(parse_grid("128").is_err());
        assert!(parse_grid("ax3").is_err());
    }

    #[test]
    fn positional_and_flag_forms() {
        let cli = Cli::try_parse_from(["hybridlab", "scenario", "a.cfg", "out"]).unwrap();
        assert_eq!(cli.command.args().config_path.as_deref(), Some(Path::new("a.cfg")));
        let cli = Cli::try_parse_from([
            "hybridlab",
            "evolve-hybrid",
            "--config",
            "a.cfg",
            "--mode",
            "linear",
            "--grid",
            "32x32",
            "--dt",
            "0.01",
            "--seed",
            "7",
        ])
        .unwrap();
        let a = cli.command.args();
        assert_eq!(a.mode, Some(Mode::Linear));
        assert_eq!(a.grid, Some((32, 32)));
        assert!(Cli::try_parse_from(["hybridlab", "scenario", "--mode", "maybe"]).is_err());
    }

    #[test]
    fn missing_config_is_a_config_error() {
        let args = RunArgs { config: Some("/nonexistent/x.cfg".into()), ..Default::default() };
        assert_eq!(run(&Command::Scenario(args)).unwrap_err().exit_code(), 2);
    }
}
