//! The full nonselective measurement run and its verdict on a sequence of
//! grids.

use hybridlab::scenario::{run_scenario, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for n in [32, 64, 128] {
        let report = run_scenario(&ScenarioConfig::reference(n)?)?;
        println!("{n}x{n}: {}", report.verdict.chain().join(", "));
        for series in &report.series {
            let last = series.samples.last().expect("samples");
            println!(
                "  {:>5}: residual {:>10}  min eigenvalue {:+.3}/A  P = {:?}",
                series.candidate.label(),
                last.residual.map_or("-".into(), |r| format!("{r:.3e}")),
                last.min_eigenvalue * report.cell_area,
                last.probabilities,
            );
        }
        if let Some(check) = &report.grid_check {
            println!("  grid engine vs dyad engine: {:.2e}", check.relative_error);
        }
    }

    let report = run_scenario(&ScenarioConfig::reference(64)?)?;
    println!("pointer marginals at t = 1:");
    for m in report.marginals.iter().filter(|m| m.t == 1.0) {
        println!("  outcome {}: ({:+.3}, {:+.3}) weight {:.3}", m.outcome + 1, m.q, m.p, m.weight);
    }
    Ok(())
}
