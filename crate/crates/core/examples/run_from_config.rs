//! Loads a configuration file, applies overrides and writes the scenario
//! outputs, as the `hybridlab scenario` command does.
//!
//! ```text
//! cargo run --example run_from_config -- [CONFIG] [OUT]
//! ```

use std::path::PathBuf;

use hybridlab::cli::{execute, Command, RunArgs, RunConfig};
use hybridlab::scenario::Mode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path =
        args.next().map_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("reference.cfg"), PathBuf::from);
    let out = args.next().map_or_else(|| std::env::temp_dir().join("hybridlab-example"), PathBuf::from);

    let text = std::fs::read_to_string(&path)?;
    let cfg = RunConfig::parse(&text)?.with_grid_size(32, 32)?.with_mode(Mode::Collapse)?.with_output_dir(out);
    println!("normalized configuration:\n{}", cfg.to_text());

    let outcome = execute(&Command::Scenario(RunArgs::default()), &cfg)?;
    for line in outcome.summary.iter().chain(&outcome.warnings) {
        println!("{line}");
    }
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
