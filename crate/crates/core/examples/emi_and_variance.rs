//! Deterministic mean and CLT variance of the mutual information over SNR,
//! for the reference holographic setup at a 3λ aperture.

use holo_rmt::config::RunConfig;
use holo_rmt::{analyze, SolverOptions};

fn main() -> holo_rmt::Result<()> {
    let cfg = RunConfig::from_json(r#"{"schema": 1, "geometry": {"side_wavelengths": 3.0}}"#)?;
    let template = cfg.template()?;
    println!("{:>6} {:>12} {:>12} {:>10}", "SNR", "C̄ (nats)", "C̄ (bits)", "V");
    for snr in [-10.0, 0.0, 10.0, 20.0, 30.0] {
        let an = analyze(&template.at_snr_db(snr)?, &SolverOptions::default())?;
        let s = &an.stats;
        println!("{snr:>6} {:>12.4} {:>12.4} {:>10.4}", s.emi, s.emi / std::f64::consts::LN_2, s.variance);
    }
    Ok(())
}
