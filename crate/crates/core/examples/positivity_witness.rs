//! A measurable event to which the linear candidate assigns a negative
//! probability: the coherence node, tested with a phase-aligned projector.

use std::collections::BTreeSet;

use hybridlab::hybrid::{event_probability, make_candidate, Candidate, Event, NodeSet};
use hybridlab::quantum::QuantumOperator;
use hybridlab::scenario::{positivity_witness, ScenarioConfig};
use hybridlab::Complex64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ScenarioConfig::reference(64)?;
    for t in [0.0, 0.25, 0.5, 1.0] {
        match positivity_witness(&cfg, t)? {
            Some(w) => println!(
                "t = {t:.2}: node ({:+.3}, {:+.3})  P(any outcome, node) = {:+.2e}  P(aligned projector, node) = {:+.4}",
                w.point.q, w.point.p, w.pointer_event, w.phase_event
            ),
            None => println!("t = {t:.2}: no coherence"),
        }
    }

    let eight = make_candidate(Candidate::Linear, &cfg.spec, &cfg.grid, &cfg.amplitudes, cfg.pointer, 1.0)?;
    let node = cfg.grid.snap(cfg.pointer);
    println!("sweep of the projector phase at t = 1:");
    for k in 0..8 {
        let theta = k as f64 * std::f64::consts::PI / 4.0;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = QuantumOperator::projector(&[Complex64::new(s, 0.0), Complex64::from_polar(s, theta)]);
        let event = Event::new(p, NodeSet::Nodes(BTreeSet::from([node])))?;
        println!("  theta = {theta:.4}: {:+.4}", event_probability(&eight, &event)?);
    }
    Ok(())
}
