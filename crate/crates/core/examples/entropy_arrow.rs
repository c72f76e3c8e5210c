//! Entropy before and after the collapse for several initial superpositions.

use hybridlab::scenario::{entropy_arrow, ScenarioConfig};
use hybridlab::Complex64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for w in [1.0, 0.9, 0.7, 0.5] {
        let amplitudes = vec![Complex64::new(f64::sqrt(w), 0.0), Complex64::new(f64::sqrt(1.0 - w), 0.0)];
        let cfg = ScenarioConfig { amplitudes, n_samples: 5, ..ScenarioConfig::reference(32)? };
        let arrow = entropy_arrow(&cfg)?;
        let binary = if w < 1.0 { -w * w.ln() - (1.0 - w) * (1.0 - w).ln() } else { 0.0 };
        let path: Vec<String> = arrow.iter().map(|(t, s)| format!("({t:.2}, {s:.4})")).collect();
        println!("|c1|^2 = {w}: {}   closed form {binary:.4}", path.join(" "));
    }
    Ok(())
}
