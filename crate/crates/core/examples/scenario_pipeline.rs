// End-to-end run from a scenario file, the same path `microcomb simulate`
// takes.
//
// ```text
// cargo run --example scenario_pipeline
// ```

use microcomb_rf::cli::simulate;
use microcomb_rf::sigio::parse_scenario;

const SCENARIO: &str = r#"{
  "schema_version": 1,
  "seed": 42,
  "comb": {"n_lines": 41},
  "design": {"kind": "sinc", "n_taps": 40, "bandwidth": 1e9, "center_frequency": 8e9},
  "shaping": {"actuator": {"gain_error": 0.1}, "osa_noise_db": 0.01},
  "beamformer": {"n_elements": 21, "steering_delays_s": [0, 1e-11], "angle_step_deg": 0.05}
}"#;

pub fn run_example() -> microcomb_rf::Result<()> {
    let scenario = parse_scenario(SCENARIO)?;
    println!("defaulted fields: {}", scenario.defaulted.join(", "));
    let out = std::env::temp_dir().join(format!("microcomb-pipeline-{}", std::process::id()));
    let outcome = simulate(&scenario, &out);
    println!("{}", outcome.summary);
    println!("{} files under {}", outcome.files.len(), out.display());
    let _ = std::fs::remove_dir_all(&out);
    assert_eq!(outcome.exit_code, 0);
    Ok(())
}

#[allow(dead_code)]
fn main() -> microcomb_rf::Result<()> {
    run_example()
}
