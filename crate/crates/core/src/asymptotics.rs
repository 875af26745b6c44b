//! Deterministic equivalent of the ergodic mutual information, the
//! asymptotic variance `V = −log det(I_{2M} − B)` and the Gaussian outage
//! approximation built from them.

use serde::Serialize;

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_logdet, real_logdet_lu, real_solve, RMatrix, RVector};
use crate::normal::normal_cdf;
use crate::solver::{solve_deltas, DeltaSolution, Resolvents, SolverOptions};

/// The four `M × M` blocks of `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct BMatrix {
    pub pi: RMatrix,
    /// Zero diagonal.
    pub xi: RMatrix,
    pub gamma: RMatrix,
    /// Diagonal of `Λ̃`.
    pub lambda: RVector,
}

impl BMatrix {
    pub fn dim(&self) -> usize {
        self.pi.nrows()
    }

    /// `[[Π, Γ], [Ξ + Λ̃, Πᵀ]]`, `2M × 2M`.
    pub fn assemble(&self) -> RMatrix {
        let m = self.dim();
        let mut b = RMatrix::zeros(2 * m, 2 * m);
        b.view_mut((0, 0), (m, m)).copy_from(&self.pi);
        b.view_mut((0, m), (m, m)).copy_from(&self.gamma);
        b.view_mut((m, 0), (m, m)).copy_from(&self.xi);
        for j in 0..m {
            b[(m + j, j)] += self.lambda[j];
        }
        b.view_mut((m, m), (m, m)).copy_from(&self.pi.transpose());
        b
    }

    /// Leading `j × j` blocks, assembled as a `2j × 2j` matrix.
    fn leading(&self, j: usize) -> RMatrix {
        let sub = BMatrix {
            pi: self.pi.view((0, 0), (j, j)).into_owned(),
            xi: self.xi.view((0, 0), (j, j)).into_owned(),
            gamma: self.gamma.view((0, 0), (j, j)).into_owned(),
            lambda: self.lambda.rows(0, j).into_owned(),
        };
        sub.assemble()
    }
}

/// Closed-form statistics at one noise level.
#[derive(Debug, Clone)]
pub struct AsymptoticStats {
    pub zeta: f64,
    /// Deterministic equivalent `C̄`, nats.
    pub emi: f64,
    /// `V`, nats².
    pub variance: f64,
    pub solution: DeltaSolution,
}

/// `C̄ = log det(T^{-1}) − N log ζ + Σ_j log(1 + δ_j) − (ζ/M) Σ_ij σ²_ij t_ii t̃_jj`.
pub fn emi_deterministic(model: &ChannelModel, sol: &DeltaSolution, res: &Resolvents) -> Result<f64> {
    let zeta = sol.rho;
    let n = model.n() as f64;
    let m = model.m() as f64;
    // log det(T^{-1}) = −log det(T)
    let logdet_t_inv = -hermitian_logdet(&res.t)?;
    let log_psi_tilde: f64 = sol.delta.iter().map(|d| d.ln_1p()).sum();
    let cross = res
        .t_diag
        .dot(&(model.profile().matrix() * &res.t_tilde_diag));
    Ok(logdet_t_inv - n * zeta.ln() + log_psi_tilde - zeta / m * cross)
}

/// Builds `Π`, `Ξ`, `Γ`, `Λ̃` from a converged solution.
pub fn build_b(model: &ChannelModel, sol: &DeltaSolution, res: &Resolvents) -> BMatrix {
    let m = model.m();
    let mf = m as f64;
    let sigma = model.profile().matrix();
    let a = model.los();
    let inv_sq: Vec<f64> = sol.delta.iter().map(|d| 1.0 / ((1.0 + d) * (1.0 + d))).collect();

    // T A: column k is T a_k.
    let ta = &res.t * a;
    let ta_abs = ta.map(|z| z.norm_sqr());
    let mut pi = sigma.tr_mul(&ta_abs) / mf;
    for (k, mut col) in pi.column_iter_mut().enumerate() {
        col *= inv_sq[k];
    }

    // a_j^H T a_k
    let ata = a.adjoint() * &ta;
    let xi = RMatrix::from_fn(m, m, |j, k| {
        if j == k {
            0.0
        } else {
            ata[(j, k)].norm_sqr() * inv_sq[j] * inv_sq[k]
        }
    });

    let t_abs = res.t.map(|z| z.norm_sqr());
    let gamma = sigma.tr_mul(&(&t_abs * sigma)) / (mf * mf);

    let rho2 = sol.rho * sol.rho;
    let lambda = res.t_tilde_diag.map(|t| rho2 * t * t);
    BMatrix { pi, xi, gamma, lambda }
}

/// `V = −log det(I_{2M} − B)`.
pub fn variance_clt(b: &BMatrix) -> Result<f64> {
    let full = b.assemble();
    let n = full.nrows();
    let s = RMatrix::identity(n, n) - full;
    let (sign, logabs) = real_logdet_lu(&s)?;
    if sign <= 0.0 || !logabs.is_finite() {
        return Err(Error::InvalidRegime(format!(
            "det(I - B) is not positive (sign {sign}, log|det| {logabs})"
        )));
    }
    Ok(-logabs)
}

/// Independent estimate of `V` from the `M` nested linear systems
/// `(I_{2j} − B_j) p_j = M [Γ_{j,1..j}, Π_{j,1..j}]ᵀ`, combined as
/// `(1/M) Σ_j (2 p_j[2j] − Λ̃_jj p_j[j])`. It agrees with [`variance_clt`]
/// up to a gap that vanishes as `M` grows. Cost is `O(M⁴)`.
pub fn variance_linear_system_oracle(b: &BMatrix) -> Result<f64> {
    let m = b.dim();
    let mf = m as f64;
    let mut total = 0.0;
    for j in 1..=m {
        let s = RMatrix::identity(2 * j, 2 * j) - b.leading(j);
        let mut q = RVector::zeros(2 * j);
        for k in 0..j {
            q[k] = mf * b.gamma[(j - 1, k)];
            q[j + k] = mf * b.pi[(j - 1, k)];
        }
        let p = real_solve(&s, &q).map_err(|_| {
            Error::InvalidRegime(format!("nested system of order {} is singular", 2 * j))
        })?;
        total += 2.0 * p[2 * j - 1] - b.lambda[j - 1] * p[j - 1];
    }
    Ok(total / mf)
}

/// `P(C < R) ≈ Φ((R − C̄)/√V)`.
pub fn outage_probability(stats: &AsymptoticStats, rate: f64) -> f64 {
    if stats.variance <= 0.0 {
        return match rate.partial_cmp(&stats.emi) {
            Some(std::cmp::Ordering::Greater) => 1.0,
            Some(std::cmp::Ordering::Equal) => 0.5,
            _ => 0.0,
        };
    }
    normal_cdf((rate - stats.emi) / stats.variance.sqrt())
}

/// Everything derived from one solve.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub stats: AsymptoticStats,
    pub resolvents: Resolvents,
    pub b: BMatrix,
}

/// Solves the fixed point at `ρ = ζ` and evaluates `C̄` and `V`.
pub fn analyze(model: &ChannelModel, options: &SolverOptions) -> Result<Analysis> {
    let (solution, resolvents) = solve_deltas(model, options)?;
    let emi = emi_deterministic(model, &solution, &resolvents)?;
    let b = build_b(model, &solution, &resolvents);
    let variance = variance_clt(&b)?;
    Ok(Analysis {
        stats: AsymptoticStats {
            zeta: model.zeta(),
            emi,
            variance,
            solution,
        },
        resolvents,
        b,
    })
}

/// One point of an outage curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutagePoint {
    pub rate: f64,
    pub p: f64,
}

/// `count` equally spaced rates over `C̄ ± width·√V`.
pub fn auto_rate_grid(stats: &AsymptoticStats, width: f64, count: usize) -> Vec<f64> {
    let sd = stats.variance.max(0.0).sqrt();
    let lo = stats.emi - width * sd;
    if count <= 1 {
        return vec![stats.emi];
    }
    let step = 2.0 * width * sd / (count - 1) as f64;
    (0..count).map(|i| lo + step * i as f64).collect()
}

pub fn outage_curve(stats: &AsymptoticStats, rates: &[f64]) -> Vec<OutagePoint> {
    rates
        .iter()
        .map(|&rate| OutagePoint {
            rate,
            p: outage_probability(stats, rate),
        })
        .collect()
}
