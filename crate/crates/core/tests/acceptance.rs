//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, Stdio};

use hybridlab::hybrid::{
    evolve_hybrid_grid, hybrid_purity_defect, make_candidate, min_eigenvalue, outcome_probabilities, residual_norm,
    von_neumann_entropy, Candidate, HamiltonianSpec, HybridGridState, HybridOperator,
};
use hybridlab::phasespace::{
    characteristics_evolve, liouville_evolve, ClassicalOperator, PhasePoint, PhaseSpaceGrid, PolynomialObservable,
};
use hybridlab::quantum::{decomposition_residual, von_neumann_evolve, QuantumOperator};
use hybridlab::scenario::{entropy_arrow, positivity_witness, run_scenario, CandidateVerdict, ScenarioConfig};
use hybridlab::Complex64;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn equal() -> Vec<Complex64> {
    vec![c(std::f64::consts::FRAC_1_SQRT_2); 2]
}

fn measurement() -> HamiltonianSpec {
    HamiltonianSpec::new(
        vec![0.0, 0.0],
        vec![1.0, -1.0],
        PolynomialObservable::zero(),
        PolynomialObservable::position(),
    )
    .unwrap()
}

fn grid(n: usize) -> PhaseSpaceGrid {
    PhaseSpaceGrid::square(4.0, n).unwrap()
}

fn gaussian(g: PhaseSpaceGrid, q0: f64, p0: f64, sigma: f64) -> ClassicalOperator {
    let raw =
        ClassicalOperator::from_fn(g, |z| (-((z.q - q0).powi(2) + (z.p - p0).powi(2)) / (2.0 * sigma * sigma)).exp());
    let tr = raw.trace();
    raw.scale(tr.inv())
}

fn l2(a: &ClassicalOperator) -> f64 {
    a.diag().iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> QuantumOperator {
    let m = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    QuantumOperator::new((&m + m.adjoint()).scale(0.5)).unwrap()
}

/// Gaussian rotated once around the origin by the harmonic flow.
fn criterion_1() -> Outcome {
    let g = grid(64);
    let h: PolynomialObservable = "0.5*q^2 + 0.5*p^2".parse().unwrap();
    let rho = gaussian(g, 1.0, 0.0, 0.5);
    let period = 2.0 * std::f64::consts::PI;
    let z = characteristics_evolve(&h, PhasePoint::new(1.0, 0.0), period);
    let expect = gaussian(g, z.q, z.p, 0.5);
    let out = liouville_evolve(&h, &rho, period, 700).map_err(|e| e.to_string())?;
    let err = l2(&out.sub(&expect).unwrap()) / l2(&expect);
    check(err <= 0.02, format!("relative L2 error after one period {err:.3e} (limit 2e-2)"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut count = 0;
    for n in [2, 3] {
        for _ in 0..100 {
            let h1 = random_hermitian(&mut rng, n);
            let h2 = random_hermitian(&mut rng, n);
            let r1 = random_hermitian(&mut rng, n);
            let r2 = random_hermitian(&mut rng, n);
            worst = worst.max(decomposition_residual(&h1, &h2, &r1, &r2, 1.0).map_err(|e| e.to_string())?);
            count += 1;
        }
    }
    check(worst <= 1e-12, format!("{count} instances, worst residual {worst:.2e} (limit 1e-12)"))
}

fn criterion_3() -> Outcome {
    let g = grid(32);
    let spec = HamiltonianSpec::new(
        vec![0.3, -0.8],
        vec![0.0, 0.0],
        "0.5*p^2 + 0.5*q^2".parse().unwrap(),
        PolynomialObservable::position(),
    )
    .unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let rho_qm = QuantumOperator::projector(&[c(s), Complex64::new(0.0, s)]);
    let rho_cm = gaussian(g, 1.0, 0.0, 0.5);
    let state = HybridGridState::product(&rho_qm, &rho_cm);
    let evolved = evolve_hybrid_grid(&spec, &state, 1.0, 1000).map_err(|e| e.to_string())?;
    let expect = HybridGridState::product(
        &von_neumann_evolve(&spec.quantum_hamiltonian(), &rho_qm, 1.0, 1.0).unwrap(),
        &liouville_evolve(spec.h_cm(), &rho_cm, 1.0, 1000).unwrap(),
    );
    let abs = evolved.sub(&expect).unwrap().frobenius_norm();
    let rel = abs / expect.frobenius_norm();
    check(abs <= 1e-6 && rel <= 1e-6, format!("Frobenius error {abs:.2e}, relative {rel:.2e} (limit 1e-6)"))
}

fn criterion_4() -> Outcome {
    let spec = measurement();
    let g = grid(64);
    let z0 = PhasePoint::new(0.0, 0.0);
    let mut defect = 0.0f64;
    for t in [0.0, 0.5, 1.0] {
        let seven = make_candidate(Candidate::Coherent, &spec, &g, &equal(), z0, t).unwrap();
        defect = defect.max(hybrid_purity_defect(&seven).unwrap());
    }
    let mut lowest = f64::INFINITY;
    let mut per_grid = Vec::new();
    for n in [32, 64, 128] {
        let g = grid(n);
        let mut low = f64::INFINITY;
        for k in 1..=10 {
            let t = 0.1 * k as f64;
            low = low.min(residual_norm(&spec, Candidate::Coherent, &g, &equal(), z0, t, 1e-3).unwrap());
        }
        per_grid.push(format!("{n}^2: {low:.2}"));
        lowest = lowest.min(low);
    }
    check(
        defect <= 1e-10 && lowest >= 0.5,
        format!(
            "purity defect {defect:.1e} (limit 1e-10); smallest residual for t>0 {} (limit 0.5)",
            per_grid.join(", ")
        ),
    )
}

fn criterion_5() -> Outcome {
    let spec = measurement();
    let z0 = PhasePoint::new(0.0, 0.0);
    let g = grid(64);
    let res = residual_norm(&spec, Candidate::Linear, &g, &equal(), z0, 1.0, 1e-3).unwrap();
    let refined: Vec<f64> = [(32, 4e-3), (64, 1e-3), (128, 2.5e-4)]
        .iter()
        .map(|&(n, dt)| residual_norm(&spec, Candidate::Linear, &grid(n), &equal(), z0, 1.0, dt).unwrap())
        .collect();
    let decreasing = refined.windows(2).all(|w| w[1] < w[0]);
    let eight = make_candidate(Candidate::Linear, &spec, &g, &equal(), z0, 1.0).unwrap();
    let scaled = min_eigenvalue(&eight).unwrap() * g.cell_area();
    let cfg = ScenarioConfig::reference(64).unwrap();
    let w = positivity_witness(&cfg, 1.0).map_err(|e| e.to_string())?.ok_or("no coherence to witness")?;
    check(
        res <= 0.05
            && decreasing
            && (scaled + 0.5).abs() <= 0.005
            && w.pointer_event.abs() <= 1e-10
            && w.phase_event <= -0.4,
        format!(
            "residual {res:.2e}; refinement {:.2e} > {:.2e} > {:.2e}; min eigenvalue {scaled:.6}/(dq dp); \
             pointer event {:.1e}; phase event {:.4}",
            refined[0], refined[1], refined[2], w.pointer_event, w.phase_event
        ),
    )
}

fn criterion_6() -> Outcome {
    let spec = measurement();
    let g = grid(64);
    let z0 = PhasePoint::new(0.0, 0.0);
    let res = residual_norm(&spec, Candidate::Collapsed, &g, &equal(), z0, 1.0, 1e-3).unwrap();
    let nine = make_candidate(Candidate::Collapsed, &spec, &g, &equal(), z0, 1.0).unwrap();
    let min = min_eigenvalue(&nine).unwrap();
    let probs = outcome_probabilities(&nine).unwrap();
    let entropy = von_neumann_entropy(&nine).unwrap();
    let prob_err = probs.iter().map(|p| (p - 0.5).abs()).fold(0.0, f64::max);
    let ent_err = (entropy - 2f64.ln()).abs();
    check(
        res <= 0.05 && min >= -1e-10 && prob_err <= 1e-10 && ent_err <= 1e-10,
        format!(
            "residual {res:.2e}; min eigenvalue {min:.3}; probabilities ({:.12}, {:.12}); entropy - ln 2 = {ent_err:.1e}",
            probs[0], probs[1]
        ),
    )
}

fn criterion_7() -> Outcome {
    let expected = ["seven_rejected_dynamics", "eight_rejected_positivity", "nine_accepted"];
    let mut lines = Vec::new();
    let mut ok = true;
    for n in [32, 64, 128] {
        let report = run_scenario(&ScenarioConfig::reference(n).unwrap()).map_err(|e| e.to_string())?;
        let chain = report.verdict.chain();
        ok &= chain == expected;
        lines.push(format!("{n}^2: {}", chain.join(" ")));
    }
    check(ok, lines.join("; "))
}

fn criterion_8() -> Outcome {
    let spec = measurement();
    let g = grid(64);
    let z0 = PhasePoint::new(0.0, 0.0);
    let amps = vec![c(1.0), c(0.0)];
    let mut spread = 0.0f64;
    let mut worst_res = 0.0f64;
    for k in 0..=10 {
        let t = 0.1 * k as f64;
        let states: Vec<_> = Candidate::ALL
            .iter()
            .map(|&kind| make_candidate(kind, &spec, &g, &amps, z0, t).unwrap().node_blocks())
            .collect();
        for other in &states[1..] {
            let same_keys = other.blocks().keys().eq(states[0].blocks().keys());
            if !same_keys {
                return Err(format!("candidates occupy different nodes at t = {t}"));
            }
            for (key, m) in other.blocks() {
                spread = spread.max((m - &states[0].blocks()[key]).norm());
            }
        }
        if t > 0.0 {
            for kind in Candidate::ALL {
                worst_res = worst_res.max(residual_norm(&spec, kind, &g, &amps, z0, t, 1e-3).unwrap());
            }
        }
    }
    let cfg = ScenarioConfig { amplitudes: amps.clone(), ..ScenarioConfig::reference(64).unwrap() };
    let arrow = entropy_arrow(&cfg).map_err(|e| e.to_string())?;
    let max_entropy = arrow.iter().map(|&(_, s)| s.abs()).fold(0.0, f64::max);
    let report = run_scenario(&cfg).map_err(|e| e.to_string())?;
    let all_accepted = Candidate::ALL.iter().all(|&k| *report.verdict.get(k) == CandidateVerdict::Accepted);
    check(
        spread <= 1e-12 && worst_res <= 0.05 && max_entropy <= 1e-12 && all_accepted,
        format!(
            "largest difference between candidates {spread:.1e}; worst residual {worst_res:.2e}; \
             max entropy {max_entropy:.1e}; verdict {}",
            report.verdict.chain().join(" ")
        ),
    )
}

fn without_output_dir(bytes: &[u8]) -> Result<serde_json::Value, String> {
    let mut v: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| e.to_string())?;
    if let Some(output) = v.pointer_mut("/config/output").and_then(|o| o.as_object_mut()) {
        output.remove("dir");
    }
    Ok(v)
}

fn criterion_9() -> Outcome {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("reference.cfg");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |name: &str, threads: &str| -> Result<std::path::PathBuf, String> {
        let out = tmp.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_hybridlab"))
            .arg("scenario")
            .arg(&config)
            .arg(&out)
            .env("HYBRIDLAB_THREADS", threads)
            .stdout(Stdio::null())
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("run with {threads} threads exited with {status}"));
        }
        Ok(out)
    };
    let a = run("a", "1")?;
    let b = run("b", "4")?;
    let mut identical = Vec::new();
    for file in ["timeseries.csv", "plotdata/marginals.csv", "plotdata/entropy.csv"] {
        let x = std::fs::read(a.join(file)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.join(file)).map_err(|e| e.to_string())?;
        if x != y {
            return Err(format!("{file} differs between 1 and 4 threads"));
        }
        identical.push(format!("{file} ({} bytes)", x.len()));
    }
    let x = std::fs::read(a.join("report.json")).map_err(|e| e.to_string())?;
    let y = std::fs::read(b.join("report.json")).map_err(|e| e.to_string())?;
    if without_output_dir(&x)? != without_output_dir(&y)? {
        return Err("report.json differs beyond the output directory".into());
    }
    check(
        true,
        format!("1 vs 4 threads byte-identical: {}; report.json equal apart from output.dir", identical.join(", ")),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("classical oracle equivalence", criterion_1),
        ("commutator decomposition identity", criterion_2),
        ("factorization without interaction", criterion_3),
        ("candidate seven: pure but violates the dynamics", criterion_4),
        ("candidate eight: solves the dynamics but is not positive", criterion_5),
        ("candidate nine: solves the dynamics, positive, Born weights", criterion_6),
        ("verdict stable under grid refinement", criterion_7),
        ("eigenstate is left unchanged", criterion_8),
        ("deterministic output", criterion_9),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {} PASS {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {detail}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
