//! Running the command pipeline on problem files, as the `varigeo` binary does.

use std::path::Path;

use varigeo::cli::{run, Command, Options};

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("problems");
    let out = std::env::temp_dir().join("varigeo-example.csv");
    let opts = Options {
        csv: Some(out.clone()),
        ..Default::default()
    };
    for (command, name) in [
        (Command::Derive, "harmonic_oscillator"),
        (Command::Derive, "time_dependent"),
        (Command::Verify, "damped_oscillator"),
        (Command::Verify, "corrupted"),
        (Command::Integrate, "action_dependent"),
    ] {
        let o = run(command, &dir.join(format!("{name}.toml")), &opts).unwrap();
        println!("{command:?} {name}: exit {} ({})", o.exit_code, o.report.status);
        for c in &o.report.verification {
            println!("  {} {}: {}", if c.pass { "pass" } else { "FAIL" }, c.name, c.reason);
        }
        if let Some(i) = &o.report.integration {
            println!("  final state {:?}", i.final_state);
        }
    }
}
