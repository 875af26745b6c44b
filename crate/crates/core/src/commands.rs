//! The four run commands behind the `holo-rmt` binary. Each is a pure
//! function of the configuration (plus overrides) and writes its artifacts
//! into an output directory.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::asymptotics::{analyze, auto_rate_grid, outage_curve, Analysis, OutagePoint};
use crate::config::{ModelKind, RunConfig};
use crate::error::{Error, Result};
use crate::io;
use crate::montecarlo::{qq_data, normalized_samples, run_mc, summarize, McSummary};
use crate::validation::{self, CriterionResult};

/// Command-line overrides applied on top of the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub snr_db: Option<Vec<f64>>,
    pub samples: Option<usize>,
    pub tol: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(snr) = &self.snr_db {
            cfg.snr_db = snr.clone();
        }
        if let Some(tol) = self.tol {
            cfg.solver.tol = tol;
        }
        if self.samples.is_some() || self.seed.is_some() {
            let mut mc = cfg.mc.unwrap_or(crate::config::McConfig { samples: 10_000, seed: 0 });
            if let Some(s) = self.samples {
                mc.samples = s;
            }
            if let Some(seed) = self.seed {
                mc.seed = seed;
            }
            cfg.mc = Some(mc);
        }
        cfg.validate()
    }
}

/// Process exit code for an error: 2 for usage and configuration problems,
/// 3 for numerical failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NoConvergence { .. } | Error::Numerical(_) | Error::InvalidRegime(_) => 3,
        _ => 2,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VectorSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl VectorSummary {
    fn of(v: &[f64]) -> Self {
        Self {
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean: v.iter().sum::<f64>() / v.len() as f64,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeEntry {
    pub snr_db: f64,
    pub zeta: f64,
    pub n: usize,
    pub m: usize,
    pub iterations: usize,
    pub residual: f64,
    pub delta_summary: VectorSummary,
    pub delta_tilde_summary: VectorSummary,
    pub emi_nats: f64,
    pub emi_bits: f64,
    pub variance: f64,
    #[serde(rename = "B_dims")]
    pub b_dims: [usize; 2],
    pub outage: Vec<OutagePoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    pub schema: u32,
    pub command: &'static str,
    pub results: Vec<AnalyzeEntry>,
}

fn snr_tag(snr: f64) -> String {
    format!("snr{snr}")
}

fn analyze_entry(cfg: &RunConfig, snr: f64, an: &Analysis, n: usize, m: usize) -> AnalyzeEntry {
    let stats = &an.stats;
    let rates = match cfg.rates.explicit() {
        Some(r) => r.to_vec(),
        None => auto_rate_grid(stats, 5.0, 101),
    };
    let sol = &stats.solution;
    AnalyzeEntry {
        snr_db: snr,
        zeta: stats.zeta,
        n,
        m,
        iterations: sol.iterations,
        residual: sol.residual,
        delta_summary: VectorSummary::of(sol.delta.as_slice()),
        delta_tilde_summary: VectorSummary::of(sol.delta_tilde.as_slice()),
        emi_nats: stats.emi,
        emi_bits: stats.emi / std::f64::consts::LN_2,
        variance: stats.variance,
        b_dims: [2 * m, 2 * m],
        outage: outage_curve(stats, &rates),
    }
}

/// Solves the fixed point, and evaluates `C̄`, `V` and the outage curve at
/// every configured SNR. Writes `analyze.json` and one outage CSV per SNR.
pub fn cmd_analyze(cfg: &RunConfig, out: Option<&Path>) -> Result<AnalyzeReport> {
    let template = cfg.template()?;
    let opts = cfg.solver.options();
    let mut results = Vec::new();
    for &snr in &cfg.snr_db {
        let model = template.at_snr_db(snr)?;
        let an = analyze(&model, &opts)?;
        log::info!(
            "SNR {snr} dB: {} iterations, C̄ = {:.6} nats, V = {:.6}",
            an.stats.solution.iterations,
            an.stats.emi,
            an.stats.variance
        );
        results.push(analyze_entry(cfg, snr, &an, model.n(), model.m()));
    }
    let report = AnalyzeReport {
        schema: 1,
        command: "analyze",
        results,
    };
    if let Some(dir) = out {
        io::write_json(&dir.join("analyze.json"), &report)?;
        for e in &report.results {
            let csv = io::pairs_csv(("rate", "p_outage"), e.outage.iter().map(|o| (o.rate, o.p)));
            io::write_atomic(&dir.join(format!("outage_{}.csv", snr_tag(e.snr_db))), csv.as_bytes())?;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct McEntry {
    pub snr_db: f64,
    pub zeta: f64,
    pub emi_nats: f64,
    pub variance: f64,
    pub summary: McSummary,
    pub samples_csv: String,
    pub qq_csv: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct McReport {
    pub schema: u32,
    pub command: &'static str,
    pub results: Vec<McEntry>,
}

/// Monte-Carlo samples at every configured SNR, summarized against the
/// closed forms. Writes one sample CSV and one QQ CSV per SNR, and
/// `mc_summary.json`.
pub fn cmd_mc(cfg: &RunConfig, out: Option<&Path>) -> Result<McReport> {
    let mc = cfg
        .mc
        .ok_or_else(|| Error::Config("the mc command needs an `mc` block or --samples".into()))?;
    let template = cfg.template()?;
    let opts = cfg.solver.options();
    let mut results = Vec::new();
    for &snr in &cfg.snr_db {
        let model = template.at_snr_db(snr)?;
        let an = analyze(&model, &opts)?;
        let set = run_mc(&model, mc.samples, mc.seed)?;
        let summary = summarize(&set, Some(&an.stats))?;
        let tag = snr_tag(snr);
        let samples_name = format!("samples_{tag}.csv");
        let qq_name = format!("qq_{tag}.csv");
        let qq = if an.stats.variance > 0.0 {
            Some(qq_data(&normalized_samples(&set, &an.stats)?))
        } else {
            None
        };
        if let Some(dir) = out {
            io::write_atomic(&dir.join(&samples_name), io::samples_csv(&set).as_bytes())?;
            if let Some(q) = &qq {
                io::write_atomic(&dir.join(&qq_name), io::qq_csv(q).as_bytes())?;
            }
        }
        results.push(McEntry {
            snr_db: snr,
            zeta: model.zeta(),
            emi_nats: an.stats.emi,
            variance: an.stats.variance,
            summary,
            samples_csv: samples_name,
            qq_csv: qq.map(|_| qq_name),
        });
    }
    let report = McReport {
        schema: 1,
        command: "mc",
        results,
    };
    if let Some(dir) = out {
        io::write_json(&dir.join("mc_summary.json"), &report)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidateReport {
    pub schema: u32,
    pub command: &'static str,
    /// Set when the configured model fails its assumptions before any
    /// computation.
    pub preflight: Option<String>,
    pub threshold_scale: f64,
    pub criteria: Vec<CriterionResult>,
    pub passed: bool,
}

impl ValidateReport {
    /// Fixed-width table of criterion, measured value, threshold, verdict.
    pub fn table(&self) -> String {
        let mut out = format!("{:<4} {:<34} {:>14}  {:<34} {}\n", "id", "criterion", "measured", "threshold", "verdict");
        if let Some(p) = &self.preflight {
            out.push_str(&format!("{:<4} {:<34} {:>14}  {:<34} FAIL  {p}\n", "pre", "model assumptions", "-", "-"));
        }
        for c in &self.criteria {
            out.push_str(&format!(
                "{:<4} {:<34} {:>14.6e}  {:<34} {}  {}\n",
                c.id,
                c.name,
                c.measured,
                c.threshold,
                if c.passed { "PASS" } else { "FAIL" },
                c.detail
            ));
        }
        out
    }
}

/// The linear-system oracle only agrees with `V` asymptotically, and its
/// cost grows as `M⁴`; it is checked for `M` in this range.
const ORACLE_MIN_DIM: usize = 32;
const ORACLE_MAX_DIM: usize = 64;

/// Runs every criterion that applies at the configured size. Monte-Carlo
/// criteria need an `mc` block. `threshold_scale` multiplies all
/// thresholds.
pub fn cmd_validate(cfg: &RunConfig, threshold_scale: f64, out: Option<&Path>) -> Result<ValidateReport> {
    if !(threshold_scale > 0.0) {
        return Err(Error::Config("threshold scale must be positive".into()));
    }
    let template = match cfg.template() {
        Ok(t) => t,
        Err(e @ Error::Assumption { .. }) => {
            let report = ValidateReport {
                schema: 1,
                command: "validate",
                preflight: Some(e.to_string()),
                threshold_scale,
                criteria: Vec::new(),
                passed: false,
            };
            if let Some(dir) = out {
                io::write_json(&dir.join("validate.json"), &report)?;
            }
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    let opts = cfg.solver.options();
    let scale = threshold_scale;
    let mut criteria = Vec::new();
    let mut centered_done = false;
    for &snr in &cfg.snr_db {
        let tag = format!("SNR {snr} dB, ");
        let model = template.at_snr_db(snr)?;
        let (mut conv, an) = validation::check_convergence(&model, &opts, scale)?;
        conv.detail = format!("{tag}{}", conv.detail);
        criteria.push(conv);
        if (ORACLE_MIN_DIM..=ORACLE_MAX_DIM).contains(&model.m()) {
            criteria.push(validation::check_linear_system_oracle(&an.b, an.stats.variance, scale)?);
        }
        if !centered_done {
            criteria.push(validation::check_centered_reduction(&model, &opts, scale)?);
            centered_done = true;
        }
        let violations = validation::invariant_violations(&model, &an);
        criteria.push(CriterionResult {
            id: "9".into(),
            name: "structural invariants".into(),
            measured: violations.len() as f64,
            threshold: "0 violations".into(),
            passed: violations.is_empty(),
            detail: format!("SNR {snr} dB{}", violations.iter().map(|v| format!(", {v}")).collect::<String>()),
        });
        if let Some(mc) = cfg.mc {
            let set = run_mc(&model, mc.samples, mc.seed)?;
            if set.len() >= 2 {
                criteria.extend(validation::check_emi_vs_mc(&an.stats, &set, scale, &tag));
                criteria.extend(validation::check_variance_vs_mc(&an.stats, &set, scale, &tag));
            }
            if set.len() >= crate::montecarlo::KS_MIN_SAMPLES && an.stats.variance > 0.0 {
                criteria.extend(validation::check_gaussianity(&an.stats, &set, scale, &tag)?);
                let rates = match cfg.rates.explicit() {
                    Some(r) => r.to_vec(),
                    None => auto_rate_grid(&an.stats, 5.0, 101),
                };
                criteria.push(validation::check_outage(&an.stats, &set, &rates, scale, &tag));
            }
        }
    }
    criteria.insert(0, validation::check_iid_oracle(8, scale)?);
    let passed = criteria.iter().all(|c| c.passed);
    let report = ValidateReport {
        schema: 1,
        command: "validate",
        preflight: None,
        threshold_scale,
        criteria,
        passed,
    };
    if let Some(dir) = out {
        io::write_json(&dir.join("validate.json"), &report)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileReport {
    pub schema: u32,
    pub command: &'static str,
    pub n_r: usize,
    pub n_s: usize,
    pub ceiling_estimate_r: usize,
    pub ceiling_estimate_s: usize,
    pub antennas_r: usize,
    pub antennas_s: usize,
    pub profile_kind: String,
    pub profile_total: f64,
    pub profile_file: PathBuf,
    pub lattice_rx_file: PathBuf,
    pub lattice_tx_file: PathBuf,
}

/// Materializes the variance profile and both lattices. Writes
/// `profile.json`, `lattice_rx.csv`, `lattice_tx.csv` and
/// `profile_summary.json`.
pub fn cmd_profile(cfg: &RunConfig, out: Option<&Path>) -> Result<ProfileReport> {
    if cfg.channel.model != ModelKind::Holographic {
        return Err(Error::Config("the profile command needs the holographic model".into()));
    }
    let geom = cfg.geometry.resolve()?;
    let (rx, tx) = (geom.rx_lattice(), geom.tx_lattice());
    let template = cfg.template()?;
    let (ant_s, ant_r) = geom.antenna_counts();
    let report = ProfileReport {
        schema: 1,
        command: "profile",
        n_r: rx.len(),
        n_s: tx.len(),
        ceiling_estimate_r: rx.ceiling_estimate(),
        ceiling_estimate_s: tx.ceiling_estimate(),
        antennas_r: ant_r,
        antennas_s: ant_s,
        profile_kind: format!("{:?}", template.profile.kind()).to_lowercase(),
        profile_total: template.profile.total(),
        profile_file: PathBuf::from("profile.json"),
        lattice_rx_file: PathBuf::from("lattice_rx.csv"),
        lattice_tx_file: PathBuf::from("lattice_tx.csv"),
    };
    if let Some(dir) = out {
        io::write_real_matrix(&dir.join(&report.profile_file), template.profile.matrix())?;
        for (lat, name) in [(&rx, &report.lattice_rx_file), (&tx, &report.lattice_tx_file)] {
            let mut csv = String::from("index,m_x,m_y\n");
            for (k, (x, y)) in lat.points.iter().enumerate() {
                csv.push_str(&format!("{k},{x},{y}\n"));
            }
            io::write_atomic(&dir.join(name), csv.as_bytes())?;
        }
        io::write_json(&dir.join("profile_summary.json"), &report)?;
    }
    Ok(report)
}
