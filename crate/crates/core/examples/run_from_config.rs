//! Drives the same pipeline as the command-line tool from a JSON config,
//! writing artifacts to a directory.
//!
//! cargo run --example run_from_config -- out_dir

use std::path::PathBuf;

use holo_rmt::commands::{cmd_analyze, cmd_mc, cmd_validate};
use holo_rmt::config::RunConfig;

const CONFIG: &str = r#"{
  "schema": 1,
  "geometry": { "side_wavelengths": 1.5 },
  "channel": { "rician_k": 10 },
  "snr_db": [0, 10],
  "mc": { "samples": 2000, "seed": 7 }
}"#;

fn main() -> holo_rmt::Result<()> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "example_out".into()).into();
    let cfg = RunConfig::from_json(CONFIG)?;
    cmd_analyze(&cfg, Some(&out))?;
    cmd_mc(&cfg, Some(&out))?;
    let report = cmd_validate(&cfg, 1.0, Some(&out))?;
    print!("{}", report.table());
    println!("artifacts in {}", out.display());
    Ok(())
}
