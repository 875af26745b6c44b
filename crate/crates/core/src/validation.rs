//! Pass/fail checks of the closed forms against oracles and Monte Carlo.
//!
//! Every check takes a `scale` that multiplies its thresholds (values below
//! 1 tighten them).

use serde::Serialize;

use crate::asymptotics::{analyze, build_b, outage_probability, variance_clt, Analysis, AsymptoticStats, BMatrix};
use crate::channel::ChannelModel;
use crate::error::Result;
use crate::linalg::{hermitian_defect, real_logdet_lu, CMatrix, RMatrix};
use crate::montecarlo::{ks_statistic, normalized_samples, qq_data, qq_slope, MiSampleSet};
use crate::normal::normal_quantile;
use crate::profile::VarianceProfile;
use crate::solver::{self_consistency_residual, solve_deltas, SolverOptions};

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: String,
    pub name: String,
    pub measured: f64,
    /// Human-readable acceptance condition.
    pub threshold: String,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    fn new(id: &str, name: &str, measured: f64, threshold: String, passed: bool, detail: String) -> Self {
        Self {
            id: id.to_string(),
            name: name.to_string(),
            measured,
            threshold,
            passed,
            detail,
        }
    }

    /// One line: `[PASS] id name: measured (threshold) detail`.
    pub fn line(&self) -> String {
        format!(
            "[{}] {} {}: measured {:.6e} ({}){}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.measured,
            self.threshold,
            if self.detail.is_empty() { String::new() } else { format!("; {}", self.detail) }
        )
    }
}

/// Two-sided interval of `s²/V` for an unbiased variance of `samples`
/// normal draws, from the Wilson-Hilferty approximation of `χ²_{S−1}`.
pub fn chi2_variance_band(samples: usize, confidence: f64) -> (f64, f64) {
    let k = (samples - 1) as f64;
    let z = normal_quantile(0.5 + confidence / 2.0);
    let c = 2.0 / (9.0 * k);
    let q = |z: f64| (1.0 - c + z * c.sqrt()).powi(3);
    (q(-z), q(z))
}

/// Confidence of the χ² band used for the variance check.
pub const VARIANCE_BAND_CONFIDENCE: f64 = 0.999;

/// Solver residual and self-consistency of a converged solve.
pub fn check_convergence(
    model: &ChannelModel,
    options: &SolverOptions,
    scale: f64,
) -> Result<(CriterionResult, Analysis)> {
    let start = std::time::Instant::now();
    let an = analyze(model, options)?;
    let elapsed = start.elapsed().as_secs_f64();
    let sc = self_consistency_residual(model, &an.stats.solution, &an.resolvents);
    let sol = &an.stats.solution;
    let passed = sol.residual <= options.tol
        && sol.iterations < options.max_iter
        && sc <= 1e-10 * scale;
    let r = CriterionResult::new(
        "1",
        "fixed-point convergence",
        sc,
        format!("self-consistency <= {:.1e}, residual <= tol", 1e-10 * scale),
        passed,
        format!(
            "n = {}, iterations = {}, residual = {:.2e}, {:.2} s",
            model.n(),
            sol.iterations,
            sol.residual,
            elapsed
        ),
    );
    Ok((r, an))
}

/// iid square model against `δ = (−1 + √(1 + 4/ρ))/2` at ρ ∈ {0.1, 1, 10}.
pub fn check_iid_oracle(n: usize, scale: f64) -> Result<CriterionResult> {
    let mut worst: f64 = 0.0;
    for rho in [0.1, 1.0, 10.0] {
        let p = VarianceProfile::new(RMatrix::from_element(n, n, 1.0))?;
        let model = ChannelModel::new(CMatrix::zeros(n, n), p, rho)?;
        let (sol, _) = solve_deltas(&model, &SolverOptions::default())?;
        let expect = (-1.0 + (1.0 + 4.0 / rho).sqrt()) / 2.0;
        for &d in sol.delta.iter().chain(sol.delta_tilde.iter()) {
            worst = worst.max((d - expect).abs());
        }
    }
    let tol = 1e-10 * scale;
    Ok(CriterionResult::new(
        "2",
        "iid closed-form oracle",
        worst,
        format!("max |δ − δ*| <= {tol:.1e}"),
        worst <= tol,
        format!("N = M = {n}"),
    ))
}

/// Relative error of the Monte-Carlo mean and its distance in standard
/// errors.
pub fn check_emi_vs_mc(stats: &AsymptoticStats, set: &MiSampleSet, scale: f64, tag: &str) -> [CriterionResult; 2] {
    let mean = set.mean();
    let rel = (mean - stats.emi).abs() / stats.emi;
    let se = set.standard_error().unwrap_or(f64::NAN);
    let z = (mean - stats.emi).abs() / se;
    let detail = format!("{tag}S = {}, C̄ = {:.6}, MC mean = {:.6}", set.len(), stats.emi, mean);
    [
        CriterionResult::new(
            "3a",
            "EMI vs MC, relative",
            rel,
            format!("<= {:.3}", 0.01 * scale),
            rel <= 0.01 * scale,
            detail.clone(),
        ),
        CriterionResult::new(
            "3b",
            "EMI vs MC, standard errors",
            z,
            format!("<= {:.2}", 4.0 * scale),
            z <= 4.0 * scale,
            detail,
        ),
    ]
}

/// Relative error of the sample variance and its position in the χ² band.
pub fn check_variance_vs_mc(stats: &AsymptoticStats, set: &MiSampleSet, scale: f64, tag: &str) -> [CriterionResult; 2] {
    let s2 = set.variance().unwrap_or(f64::NAN);
    let rel = (s2 - stats.variance).abs() / stats.variance;
    let (lo, hi) = chi2_variance_band(set.len().max(2), VARIANCE_BAND_CONFIDENCE);
    // Scale widens or narrows the band around 1.
    let (lo, hi) = (1.0 - (1.0 - lo) * scale, 1.0 + (hi - 1.0) * scale);
    let ratio = s2 / stats.variance;
    let detail = format!("{tag}S = {}, V = {:.6}, MC variance = {:.6}", set.len(), stats.variance, s2);
    [
        CriterionResult::new(
            "4a",
            "variance vs MC, relative",
            rel,
            format!("<= {:.3}", 0.05 * scale),
            rel <= 0.05 * scale,
            detail.clone(),
        ),
        CriterionResult::new(
            "4b",
            "variance vs MC, chi-square band",
            ratio,
            format!("s²/V in [{lo:.4}, {hi:.4}]"),
            (lo..=hi).contains(&ratio),
            detail,
        ),
    ]
}

/// `|oracle − V| <= 0.05 V`.
pub fn check_linear_system_oracle(b: &BMatrix, variance: f64, scale: f64) -> Result<CriterionResult> {
    let oracle = crate::asymptotics::variance_linear_system_oracle(b)?;
    let gap = (oracle - variance).abs() / variance;
    Ok(CriterionResult::new(
        "5",
        "linear-system variance oracle",
        gap,
        format!("|oracle − V|/V <= {:.3}", 0.05 * scale),
        gap <= 0.05 * scale,
        format!("M = {}, V = {variance:.6}, oracle = {oracle:.6}", b.dim()),
    ))
}

/// KS distance and QQ slope of the normalized samples.
pub fn check_gaussianity(stats: &AsymptoticStats, set: &MiSampleSet, scale: f64, tag: &str) -> Result<[CriterionResult; 2]> {
    let z = normalized_samples(set, stats)?;
    let s = z.len() as f64;
    let ks = ks_statistic(&z)?;
    let slope = qq_slope(&qq_data(&z));
    let ks_tol = 1.95 / s.sqrt() * scale;
    let half = 0.03 * scale;
    Ok([
        CriterionResult::new(
            "6a",
            "Gaussianity, KS",
            ks,
            format!("<= {ks_tol:.5}"),
            ks <= ks_tol,
            format!("{tag}S = {}", z.len()),
        ),
        CriterionResult::new(
            "6b",
            "Gaussianity, QQ slope",
            slope,
            format!("in [{:.3}, {:.3}]", 1.0 - half, 1.0 + half),
            (slope - 1.0).abs() <= half,
            format!("{tag}S = {}", z.len()),
        ),
    ])
}

/// Sup distance between the Gaussian outage curve and the empirical CDF.
pub fn check_outage(stats: &AsymptoticStats, set: &MiSampleSet, rates: &[f64], scale: f64, tag: &str) -> CriterionResult {
    let mut worst: f64 = 0.0;
    let mut at = f64::NAN;
    for &r in rates {
        let d = (outage_probability(stats, r) - set.empirical_outage(r)).abs();
        if d > worst {
            worst = d;
            at = r;
        }
    }
    CriterionResult::new(
        "7",
        "outage vs empirical CDF",
        worst,
        format!("<= {:.3}", 0.02 * scale),
        worst <= 0.02 * scale,
        format!("{tag}{} rates, worst at R = {at:.4}, S = {}", rates.len(), set.len()),
    )
}

/// `V` of the centered model against `−log det(I − Λ̃Γ)`.
pub fn check_centered_reduction(model: &ChannelModel, options: &SolverOptions, scale: f64) -> Result<CriterionResult> {
    let centered = ChannelModel::new(
        CMatrix::zeros(model.n(), model.m()),
        model.profile().clone(),
        model.zeta(),
    )?;
    let (sol, res) = solve_deltas(&centered, options)?;
    let b = build_b(&centered, &sol, &res);
    let v = variance_clt(&b)?;
    let m = b.dim();
    let lg = RMatrix::from_diagonal(&b.lambda) * &b.gamma;
    let (_, logabs) = real_logdet_lu(&(RMatrix::identity(m, m) - lg))?;
    let rel = (v + logabs).abs() / v;
    Ok(CriterionResult::new(
        "8b",
        "centered block reduction",
        rel,
        format!("<= {:.1e}", 1e-10 * scale),
        rel <= 1e-10 * scale,
        format!("M = {m}"),
    ))
}

/// Structural invariants of one analyzed model; returns the violations.
pub fn invariant_violations(model: &ChannelModel, an: &Analysis) -> Vec<String> {
    let mut bad = Vec::new();
    let sol = &an.stats.solution;
    let (bd, bdt) = sol.trace_bounds(model);
    let slack = 1.0 + 1e-12;
    if !sol.delta.iter().all(|&d| d > 0.0 && d <= bd * slack) {
        bad.push("δ outside (0, (N/M)σ²_max/ρ]".to_string());
    }
    if !sol.delta_tilde.iter().all(|&d| d > 0.0 && d <= bdt * slack) {
        bad.push("δ̃ outside (0, σ²_max/ρ]".to_string());
    }
    for (name, t) in [("T", &an.resolvents.t), ("T̃", &an.resolvents.t_tilde)] {
        if hermitian_defect(t) > 1e-12 * t.iter().map(|z| z.norm()).fold(0.0, f64::max) {
            bad.push(format!("{name} is not Hermitian"));
        }
        if crate::linalg::hpd_cholesky(t).is_err() {
            bad.push(format!("{name} is not positive definite"));
        }
    }
    let b = &an.b;
    if !b.assemble().iter().all(|&x| x >= 0.0) {
        bad.push("B has a negative entry".to_string());
    }
    if !(0..b.dim()).all(|j| b.xi[(j, j)] == 0.0) {
        bad.push("Ξ has a nonzero diagonal".to_string());
    }
    let det = (-an.stats.variance).exp();
    if !(det > 0.0 && det <= 1.0) {
        bad.push(format!("det(I − B) = {det} outside (0, 1]"));
    }
    if !(an.stats.variance > 0.0) {
        bad.push(format!("V = {} is not positive", an.stats.variance));
    }
    if !(an.stats.emi >= 0.0) {
        bad.push(format!("C̄ = {} is negative", an.stats.emi));
    }
    bad
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi2_band_brackets_one() {
        let (lo, hi) = chi2_variance_band(100_000, 0.999);
        assert!(lo < 1.0 && hi > 1.0);
        // ≈ 1 ± 3.29·√(2/S)
        let half = 3.2905 * (2.0f64 / 99_999.0).sqrt();
        assert!((1.0 - lo - half).abs() < 2e-4 && (hi - 1.0 - half).abs() < 2e-4);
    }

    #[test]
    fn iid_oracle_passes() {
        assert!(check_iid_oracle(8, 1.0).unwrap().passed);
    }

    #[test]
    fn line_format() {
        let r = CriterionResult::new("9", "x", 0.5, "<= 1".into(), true, String::new());
        assert_eq!(r.line(), "[PASS] 9 x: measured 5.000000e-1 (<= 1)");
    }
}
