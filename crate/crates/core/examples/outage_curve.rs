//! Gaussian outage curve around the mean, printed as CSV.

use holo_rmt::asymptotics::{auto_rate_grid, outage_curve};
use holo_rmt::config::RunConfig;
use holo_rmt::{analyze, SolverOptions};

fn main() -> holo_rmt::Result<()> {
    let cfg = RunConfig::from_json(r#"{"schema": 1, "geometry": {"side_wavelengths": 3.38}}"#)?;
    let model = cfg.template()?.at_snr_db(30.0)?;
    let stats = analyze(&model, &SolverOptions::default())?.stats;
    println!("rate_nats,p_outage");
    for p in outage_curve(&stats, &auto_rate_grid(&stats, 3.0, 13)) {
        println!("{:.4},{:.6}", p.rate, p.p);
    }
    Ok(())
}
