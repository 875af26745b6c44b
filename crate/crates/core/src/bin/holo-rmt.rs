use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use holo_rmt::commands::{self, exit_code, Overrides};
use holo_rmt::config::RunConfig;
use holo_rmt::Error;

#[derive(Parser)]
#[command(name = "holo-rmt", version, about = "Mutual-information statistics of holographic MIMO channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Run configuration (JSON, `schema: 1`).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated SNR values in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr_db: Option<Vec<f64>>,
    #[arg(long)]
    samples: Option<usize>,
    /// Solver tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Deterministic equivalent, variance and outage curve per SNR.
    Analyze(Common),
    /// Monte-Carlo samples and their summary.
    Mc(Common),
    /// Pass/fail table of every applicable acceptance check.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Multiplies every threshold; values below 1 tighten them.
        #[arg(long, default_value_t = 1.0)]
        threshold_scale: f64,
    },
    /// Variance profile and wavenumber lattices.
    Profile(Common),
}

fn load(c: &Common) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::load(&c.config)?;
    Overrides {
        seed: c.seed,
        snr_db: c.snr_db.clone(),
        samples: c.samples,
        tol: c.tol,
    }
    .apply(&mut cfg)?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Analyze(c) => {
            let report = commands::cmd_analyze(&load(&c)?, Some(&c.out))?;
            for e in &report.results {
                println!(
                    "SNR {:>6} dB  zeta {:.4e}  C {:.6} nats ({:.6} bits)  V {:.6}  [{} iterations]",
                    e.snr_db, e.zeta, e.emi_nats, e.emi_bits, e.variance, e.iterations
                );
            }
        }
        Command::Mc(c) => {
            let report = commands::cmd_mc(&load(&c)?, Some(&c.out))?;
            for e in &report.results {
                let s = &e.summary;
                println!(
                    "SNR {:>6} dB  S {}  mean {:.6} (C {:.6})  var {}  (V {:.6})  ks {}{}",
                    e.snr_db,
                    s.samples,
                    s.mean_nats,
                    e.emi_nats,
                    s.variance.map_or("-".into(), |v| format!("{v:.6}")),
                    e.variance,
                    s.ks.map_or("-".into(), |v| format!("{v:.5}")),
                    if s.flags.is_empty() { String::new() } else { format!("  [{}]", s.flags.join(", ")) }
                );
            }
        }
        Command::Validate { common, threshold_scale } => {
            let report = commands::cmd_validate(&load(&common)?, threshold_scale, Some(&common.out))?;
            print!("{}", report.table());
            if !report.passed {
                return Ok(1);
            }
        }
        Command::Profile(c) => {
            let r = commands::cmd_profile(&load(&c)?, Some(&c.out))?;
            println!("n_R = {} (ceiling estimate {})", r.n_r, r.ceiling_estimate_r);
            println!("n_S = {} (ceiling estimate {})", r.n_s, r.ceiling_estimate_s);
            println!("antennas N_R = {}, N_S = {}", r.antennas_r, r.antennas_s);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(v) = std::env::var("HOLO_RMT_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not size the thread pool: {e}");
                }
            }
            _ => {
                eprintln!("error: HOLO_RMT_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(2);
            }
        }
    }
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::NoConvergence { trace, .. } = &e {
                let tail: Vec<String> = trace.iter().rev().take(5).map(|r| format!("{r:.3e}")).collect();
                eprintln!("last updates (newest first): {}", tail.join(", "));
            }
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
