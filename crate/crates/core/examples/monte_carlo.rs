//! Monte-Carlo mutual information against the asymptotic mean and variance,
//! with the KS distance and QQ slope of the normalized samples.
//!
//! cargo run --release --example monte_carlo -- 20000

use holo_rmt::config::RunConfig;
use holo_rmt::montecarlo::summarize;
use holo_rmt::{analyze, run_mc, SolverOptions};

fn main() -> holo_rmt::Result<()> {
    let samples = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5000);
    let cfg = RunConfig::from_json(r#"{"schema": 1, "geometry": {"side_wavelengths": 2.0}}"#)?;
    let model = cfg.template()?.at_snr_db(10.0)?;
    let stats = analyze(&model, &SolverOptions::default())?.stats;
    let set = run_mc(&model, samples, 42)?;
    let s = summarize(&set, Some(&stats))?;
    println!("n = {}, S = {}", model.n(), s.samples);
    println!("mean     {:.5}  vs C̄ {:.5}  (SE {:.5})", s.mean_nats, stats.emi, s.standard_error.unwrap());
    println!("variance {:.5}  vs V {:.5}", s.variance.unwrap(), stats.variance);
    println!("KS {:.4}, QQ slope {:.4}", s.ks.unwrap_or(f64::NAN), s.qq_slope.unwrap_or(f64::NAN));
    Ok(())
}
