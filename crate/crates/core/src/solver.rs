//! Fixed-point solution of the coupled `N + M` equations
//!
//! ```text
//! δ_j = Tr(D_j T)/M,      j = 1..M
//! δ̃_i = Tr(D̃_i T̃)/M,     i = 1..N
//! ```
//!
//! with, at `z = −ρ`,
//!
//! ```text
//! ψ_i  = 1/(ρ(1 + δ̃_i)),           ψ̃_j = 1/(ρ(1 + δ_j))
//! T    = (ψ^{-1} + ρ A ψ̃ A^H)^{-1},  T̃   = (ψ̃^{-1} + ρ A^H ψ A)^{-1}
//! ```
//!
//! `D_j = diag(Σ^{[j]})` and `D̃_i = diag(Σ^{(i)})` are diagonal, so every
//! trace is a dot product of a column (row) of `Σ` with `diag(T)` (`diag(T̃)`).

use nalgebra::DVector;
use num_complex::Complex64;

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_inverse, hpd_cholesky, real_diagonal, CMatrix, RVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop when the sup-norm of one full update is at most `tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Relaxation weight in `(0, 1]`; 1 is the plain iteration.
    pub damping: f64,
    /// Common starting value of every `δ_j` and `δ̃_i`.
    pub initial: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
            damping: 1.0,
            initial: 1.0,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Domain(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Domain("max_iter must be >= 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Domain(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        if !(self.initial > 0.0) {
            return Err(Error::Domain("initial value must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DeltaSolution {
    /// `δ_j`, length `M`.
    pub delta: RVector,
    /// `δ̃_i`, length `N`.
    pub delta_tilde: RVector,
    /// `ρ = −z = ζ`.
    pub rho: f64,
    pub iterations: usize,
    /// Sup-norm of the last update.
    pub residual: f64,
}

impl DeltaSolution {
    /// Upper bounds `((N/M) σ²_max/ρ, σ²_max/ρ)` on `δ_j` and `δ̃_i`.
    pub fn trace_bounds(&self, model: &ChannelModel) -> (f64, f64) {
        let smax = model.profile().max_entry();
        let ratio = model.n() as f64 / model.m() as f64;
        (ratio * smax / self.rho, smax / self.rho)
    }
}

/// Resolvent equivalents at `z = −ρ`.
#[derive(Debug, Clone)]
pub struct Resolvents {
    /// `T`, `N × N` Hermitian positive definite.
    pub t: CMatrix,
    /// `T̃`, `M × M` Hermitian positive definite.
    pub t_tilde: CMatrix,
    pub psi: RVector,
    pub psi_tilde: RVector,
    /// Real diagonal `t_ii`.
    pub t_diag: RVector,
    /// Real diagonal `t̃_jj`.
    pub t_tilde_diag: RVector,
}

/// Diagonals of `D_1..D_M` (columns of `Σ`) and `D̃_1..D̃_N` (rows of `Σ`).
pub fn build_d_matrices(model: &ChannelModel) -> (Vec<RVector>, Vec<RVector>) {
    let sigma = model.profile().matrix();
    let d = sigma.column_iter().map(|c| c.into_owned()).collect();
    let d_tilde = sigma.row_iter().map(|r| r.transpose()).collect();
    (d, d_tilde)
}

/// Materializes `T`, `T̃`, `ψ`, `ψ̃` from given `δ`, `δ̃` at `z = −ρ`.
pub fn compute_resolvents(
    model: &ChannelModel,
    delta: &RVector,
    delta_tilde: &RVector,
    rho: f64,
) -> Result<Resolvents> {
    let (n, m) = (model.n(), model.m());
    if delta.len() != m || delta_tilde.len() != n {
        return Err(Error::Shape(format!(
            "expected δ of length {m} and δ̃ of length {n}, got {} and {}",
            delta.len(),
            delta_tilde.len()
        )));
    }
    if !(rho > 0.0) {
        return Err(Error::Domain(format!("rho must be positive, got {rho}")));
    }
    if delta.iter().chain(delta_tilde.iter()).any(|&x| !(x > 0.0)) {
        return Err(Error::Domain("δ and δ̃ must be entrywise positive".into()));
    }
    let psi = delta_tilde.map(|dt| 1.0 / (rho * (1.0 + dt)));
    let psi_tilde = delta.map(|d| 1.0 / (rho * (1.0 + d)));
    let a = model.los();

    let t_inv = {
        // ρ A ψ̃ A^H = A diag(1/(1+δ)) A^H
        let mut scaled = a.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= Complex64::new(rho * psi_tilde[j], 0.0);
        }
        let mut ti = &scaled * a.adjoint();
        for i in 0..n {
            ti[(i, i)] += 1.0 / psi[i];
        }
        ti
    };
    let t_tilde_inv = {
        let mut scaled = a.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= Complex64::new(rho * psi[i], 0.0);
        }
        let mut ti = a.adjoint() * &scaled;
        for j in 0..m {
            ti[(j, j)] += 1.0 / psi_tilde[j];
        }
        ti
    };
    let t = hermitian_inverse(&t_inv)?;
    let t_tilde = hermitian_inverse(&t_tilde_inv)?;
    let t_diag = real_diagonal(&t)?;
    let t_tilde_diag = real_diagonal(&t_tilde)?;
    Ok(Resolvents {
        t,
        t_tilde,
        psi,
        psi_tilde,
        t_diag,
        t_tilde_diag,
    })
}

/// Largest violation of `δ_j = Tr(D_j T)/M` and `δ̃_i = Tr(D̃_i T̃)/M`.
pub fn self_consistency_residual(model: &ChannelModel, sol: &DeltaSolution, res: &Resolvents) -> f64 {
    let sigma = model.profile().matrix();
    let m = model.m() as f64;
    let delta = sigma.tr_mul(&res.t_diag) / m;
    let delta_tilde = sigma * &res.t_tilde_diag / m;
    let a = (delta - &sol.delta).amax();
    let b = (delta_tilde - &sol.delta_tilde).amax();
    a.max(b)
}

/// How `diag(T)` and `diag(T̃)` are evaluated inside the iteration.
enum DiagEngine {
    /// `A = 0`: `T = ψ`, `T̃ = ψ̃`.
    Centered,
    /// `A = W V^H` with `r` small: Woodbury identity on the thin factors.
    LowRank {
        /// `U S`, `N × r`.
        w: CMatrix,
        /// `V S`, `M × r`.
        w_tilde: CMatrix,
        /// `U`, `N × r`.
        u: CMatrix,
        /// `V`, `M × r`.
        v: CMatrix,
    },
    Dense,
}

impl DiagEngine {
    fn for_model(model: &ChannelModel) -> Self {
        let a = model.los();
        let (n, m) = (model.n(), model.m());
        if model.los_norm() == 0.0 {
            return DiagEngine::Centered;
        }
        let svd = a.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&k| svd.singular_values[k] > 1e-13 * smax)
            .collect();
        let r = keep.len();
        let dense_cost = (n.pow(3) + m.pow(3)) as f64;
        let low_cost = 4.0 * (r * r * (n + m) + 2 * r.pow(3)) as f64;
        if low_cost >= dense_cost {
            return DiagEngine::Dense;
        }
        let (Some(u_full), Some(vt_full)) = (svd.u, svd.v_t) else {
            return DiagEngine::Dense;
        };
        let u = CMatrix::from_fn(n, r, |i, k| u_full[(i, keep[k])]);
        let v = CMatrix::from_fn(m, r, |j, k| vt_full[(keep[k], j)].conj());
        let s: Vec<f64> = keep.iter().map(|&k| svd.singular_values[k]).collect();
        let w = CMatrix::from_fn(n, r, |i, k| u[(i, k)] * s[k]);
        let w_tilde = CMatrix::from_fn(m, r, |j, k| v[(j, k)] * s[k]);
        DiagEngine::LowRank { w, w_tilde, u, v }
    }

    /// `diag((diag(p) + W K W^H)^{-1})` with `K = B^H diag(c) B`.
    fn woodbury_diag(p: &RVector, w: &CMatrix, b: &CMatrix, c: &RVector) -> Result<RVector> {
        let r = w.ncols();
        // K = B^H diag(c) B
        let mut cb = b.clone();
        for (i, mut row) in cb.row_iter_mut().enumerate() {
            row *= Complex64::new(c[i], 0.0);
        }
        let k = b.adjoint() * cb;
        let k_inv = hermitian_inverse(&k)?;
        // Y = P^{-1} W
        let mut y = w.clone();
        for (i, mut row) in y.row_iter_mut().enumerate() {
            row *= Complex64::new(1.0 / p[i], 0.0);
        }
        let core = k_inv + w.adjoint() * &y;
        let chol = hpd_cholesky(&core)?;
        // Z = L^{-1} Y^H, diag(Y C^{-1} Y^H)_i = ‖Z[:, i]‖²
        let z = chol.l().solve_lower_triangular(&y.adjoint()).ok_or_else(|| {
            Error::Numerical("singular Woodbury factor".into())
        })?;
        let mut out = RVector::zeros(p.len());
        for i in 0..p.len() {
            let mut s = 0.0;
            for kk in 0..r {
                s += z[(kk, i)].norm_sqr();
            }
            out[i] = 1.0 / p[i] - s;
        }
        Ok(out)
    }

    fn t_diag(&self, model: &ChannelModel, delta: &RVector, delta_tilde: &RVector, rho: f64) -> Result<RVector> {
        match self {
            DiagEngine::Centered => Ok(delta_tilde.map(|dt| 1.0 / (rho * (1.0 + dt)))),
            DiagEngine::LowRank { w, v, .. } => {
                let p = delta_tilde.map(|dt| rho * (1.0 + dt));
                let c = delta.map(|d| 1.0 / (1.0 + d));
                Self::woodbury_diag(&p, w, v, &c)
            }
            DiagEngine::Dense => Ok(compute_resolvents(model, delta, delta_tilde, rho)?.t_diag),
        }
    }

    fn t_tilde_diag(&self, model: &ChannelModel, delta: &RVector, delta_tilde: &RVector, rho: f64) -> Result<RVector> {
        match self {
            DiagEngine::Centered => Ok(delta.map(|d| 1.0 / (rho * (1.0 + d)))),
            DiagEngine::LowRank { w_tilde, u, .. } => {
                let p = delta.map(|d| rho * (1.0 + d));
                let c = delta_tilde.map(|dt| 1.0 / (1.0 + dt));
                Self::woodbury_diag(&p, w_tilde, u, &c)
            }
            DiagEngine::Dense => Ok(compute_resolvents(model, delta, delta_tilde, rho)?.t_tilde_diag),
        }
    }
}

/// Solves the system at `ρ = ζ` of the model, starting from
/// `δ = δ̃ = options.initial`.
pub fn solve_deltas(model: &ChannelModel, options: &SolverOptions) -> Result<(DeltaSolution, Resolvents)> {
    let delta = DVector::from_element(model.m(), options.initial);
    let delta_tilde = DVector::from_element(model.n(), options.initial);
    solve_deltas_from(model, options, delta, delta_tilde)
}

/// Same as [`solve_deltas`] from an explicit starting point.
pub fn solve_deltas_from(
    model: &ChannelModel,
    options: &SolverOptions,
    mut delta: RVector,
    mut delta_tilde: RVector,
) -> Result<(DeltaSolution, Resolvents)> {
    options.validate()?;
    let rho = model.zeta();
    let (n, m) = (model.n(), model.m());
    if delta.len() != m || delta_tilde.len() != n {
        return Err(Error::Shape("starting point has the wrong length".into()));
    }
    if delta.iter().chain(delta_tilde.iter()).any(|&x| !(x > 0.0)) {
        return Err(Error::Domain("starting point must be entrywise positive".into()));
    }
    let sigma = model.profile().matrix();
    let engine = DiagEngine::for_model(model);
    let inv_m = 1.0 / m as f64;
    let mix = options.damping;
    let mut trace = Vec::new();

    for iteration in 1..=options.max_iter {
        let t_diag = engine.t_diag(model, &delta, &delta_tilde, rho)?;
        let fresh = sigma.tr_mul(&t_diag) * inv_m;
        let next_delta = if mix == 1.0 { fresh } else { &delta * (1.0 - mix) + fresh * mix };
        let step_delta = (&next_delta - &delta).amax();
        delta = next_delta;

        let tt_diag = engine.t_tilde_diag(model, &delta, &delta_tilde, rho)?;
        let fresh = sigma * tt_diag * inv_m;
        let next_dt = if mix == 1.0 { fresh } else { &delta_tilde * (1.0 - mix) + fresh * mix };
        let step_dt = (&next_dt - &delta_tilde).amax();
        delta_tilde = next_dt;

        let update = step_delta.max(step_dt);
        if !update.is_finite() {
            return Err(Error::Numerical(format!(
                "fixed-point iterate became non-finite at iteration {iteration}"
            )));
        }
        trace.push(update);
        if update <= options.tol {
            let resolvents = compute_resolvents(model, &delta, &delta_tilde, rho)?;
            let solution = DeltaSolution {
                delta,
                delta_tilde,
                rho,
                iterations: iteration,
                residual: update,
            };
            return Ok((solution, resolvents));
        }
    }
    Err(Error::NoConvergence {
        iterations: options.max_iter,
        residual: trace.last().copied().unwrap_or(f64::NAN),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{synth_los, LosKind};
    use crate::linalg::{hermitian_defect, RMatrix};
    use crate::profile::VarianceProfile;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Closed-form iid fixed point: δ = 1/(ρ(1+δ)) for N = M, Σ = 1.
    fn iid_delta(rho: f64) -> f64 {
        (-1.0 + (1.0 + 4.0 / rho).sqrt()) / 2.0
    }

    fn iid_model(n: usize, rho: f64) -> ChannelModel {
        let p = VarianceProfile::new(RMatrix::from_element(n, n, 1.0)).unwrap();
        ChannelModel::new(CMatrix::zeros(n, n), p, rho).unwrap()
    }

    fn random_model(n: usize, m: usize, seed: u64, zeta: f64) -> ChannelModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma = RMatrix::from_fn(n, m, |_, _| 0.2 + 1.8 * rng.gen::<f64>());
        let a = CMatrix::from_fn(n, m, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * 0.5
        });
        ChannelModel::new(a, VarianceProfile::new(sigma).unwrap(), zeta).unwrap()
    }

    #[test]
    fn d_matrices_are_columns_and_rows() {
        let p = VarianceProfile::new(RMatrix::from_element(2, 3, 1.0)).unwrap();
        let model = ChannelModel::new(CMatrix::zeros(2, 3), p, 1.0).unwrap();
        let (d, dt) = build_d_matrices(&model);
        assert_eq!(d.len(), 3);
        assert_eq!(dt.len(), 2);
        assert!(d.iter().all(|x| x.len() == 2 && x.iter().all(|&v| v == 1.0)));
        assert!(dt.iter().all(|x| x.len() == 3 && x.iter().all(|&v| v == 1.0)));

        let dd = vec![0.5, 2.0];
        let dtt = vec![1.0, 3.0, 0.25];
        let model = ChannelModel::kronecker(CMatrix::zeros(2, 3), dd.clone(), dtt.clone(), 1.0).unwrap();
        let (d, _) = build_d_matrices(&model);
        for j in 0..3 {
            for i in 0..2 {
                assert_eq!(d[j][i], dtt[j] * dd[i]);
            }
        }
        let model = random_model(3, 2, 4, 1.0);
        let (d, _) = build_d_matrices(&model);
        for j in 0..2 {
            let colsum: f64 = (0..3).map(|i| model.profile().matrix()[(i, j)]).sum();
            assert!((d[j].sum() - colsum).abs() < 1e-15);
        }
    }

    #[test]
    fn iid_matches_closed_form() {
        for &rho in &[0.1, 1.0, 10.0] {
            let model = iid_model(6, rho);
            let (sol, res) = solve_deltas(&model, &SolverOptions::default()).unwrap();
            let expect = iid_delta(rho);
            for &d in sol.delta.iter().chain(sol.delta_tilde.iter()) {
                assert!((d - expect).abs() < 1e-10, "rho = {rho}: {d} vs {expect}");
            }
            assert!(self_consistency_residual(&model, &sol, &res) < 1e-10);
        }
    }

    #[test]
    fn scalar_golden_ratio_resolvent() {
        let model = iid_model(1, 1.0);
        let (sol, res) = solve_deltas(&model, &SolverOptions::default()).unwrap();
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        assert!((sol.delta[0] - golden).abs() < 1e-12);
        assert!((res.t[(0, 0)].re - 2.0 / (1.0 + 5f64.sqrt())).abs() < 1e-12);
        assert!((res.t_tilde[(0, 0)].re - 2.0 / (1.0 + 5f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn centered_resolvent_is_psi() {
        let mut model = random_model(4, 3, 2, 0.7);
        model = ChannelModel::new(CMatrix::zeros(4, 3), model.profile().clone(), 0.7).unwrap();
        let delta = DVector::from_vec(vec![0.3, 0.9, 1.4]);
        let dt = DVector::from_vec(vec![0.2, 0.5, 1.0, 2.0]);
        let res = compute_resolvents(&model, &delta, &dt, 0.7).unwrap();
        for i in 0..4 {
            assert!((res.t[(i, i)].re - 1.0 / (0.7 * (1.0 + dt[i]))).abs() < 1e-15);
        }
    }

    #[test]
    fn resolvents_are_hermitian() {
        for seed in 0..5 {
            let model = random_model(7, 5, seed, 0.3);
            let (_, res) = solve_deltas(&model, &SolverOptions::default()).unwrap();
            assert!(hermitian_defect(&res.t) <= 1e-12);
            assert!(hermitian_defect(&res.t_tilde) <= 1e-12);
        }
    }

    #[test]
    fn high_noise_limit() {
        let model = random_model(5, 4, 9, 1e6);
        let (sol, _) = solve_deltas(&model, &SolverOptions::default()).unwrap();
        let (bound, _) = sol.trace_bounds(&model);
        assert!(sol.delta.iter().all(|&d| d > 0.0 && d <= bound));
        assert!(bound < 1e-5);
    }

    #[test]
    fn unique_from_different_starts() {
        let model = random_model(8, 6, 11, 0.5);
        let opts = SolverOptions::default();
        let (a, _) = solve_deltas_from(&model, &opts, DVector::from_element(6, 0.5), DVector::from_element(8, 0.5)).unwrap();
        let (b, _) = solve_deltas_from(&model, &opts, DVector::from_element(6, 2.0), DVector::from_element(8, 2.0)).unwrap();
        assert!((a.delta - b.delta).amax() <= 10.0 * opts.tol);
        assert!((a.delta_tilde - b.delta_tilde).amax() <= 10.0 * opts.tol);
    }

    #[test]
    fn woodbury_matches_dense() {
        let base = random_model(12, 9, 5, 0.4);
        let a = synth_los(12, 9, LosKind::LowRank { rank: 2 }, 8).unwrap();
        let model = ChannelModel::new(a, base.profile().clone(), 0.4).unwrap();
        let engine = DiagEngine::for_model(&model);
        assert!(matches!(engine, DiagEngine::LowRank { .. }));
        let delta = DVector::from_fn(9, |j, _| 0.5 + 0.1 * j as f64);
        let dt = DVector::from_fn(12, |i, _| 0.3 + 0.05 * i as f64);
        let dense = compute_resolvents(&model, &delta, &dt, 0.4).unwrap();
        let fast_t = engine.t_diag(&model, &delta, &dt, 0.4).unwrap();
        let fast_tt = engine.t_tilde_diag(&model, &delta, &dt, 0.4).unwrap();
        assert!((fast_t - &dense.t_diag).amax() < 1e-13);
        assert!((fast_tt - &dense.t_tilde_diag).amax() < 1e-13);
    }

    #[test]
    fn damping_converges_to_same_point() {
        let model = random_model(6, 6, 3, 0.2);
        let (a, _) = solve_deltas(&model, &SolverOptions::default()).unwrap();
        let damped = SolverOptions { damping: 0.5, ..Default::default() };
        let (b, _) = solve_deltas(&model, &damped).unwrap();
        assert!((a.delta - b.delta).amax() < 1e-10);
    }

    #[test]
    fn non_convergence_carries_trace() {
        let model = random_model(6, 6, 3, 0.01);
        let opts = SolverOptions { max_iter: 3, ..Default::default() };
        match solve_deltas(&model, &opts) {
            Err(Error::NoConvergence { iterations, trace, .. }) => {
                assert_eq!(iterations, 3);
                assert_eq!(trace.len(), 3);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(solve_deltas(&model, &SolverOptions { damping: 0.0, ..Default::default() }).is_err());
    }

    #[test]
    fn separable_solution_factorizes() {
        let d = vec![0.4, 1.3, 0.8, 2.1, 0.6];
        let dt = vec![1.5, 0.7, 0.9, 1.1];
        let a = synth_los(5, 4, LosKind::LowRank { rank: 4 }, 2).unwrap();
        // Factorization only holds without LoS.
        let model = ChannelModel::kronecker(CMatrix::zeros(5, 4), d.clone(), dt.clone(), 0.3).unwrap();
        let (sol, _) = solve_deltas(&model, &SolverOptions::default()).unwrap();
        let r0 = sol.delta[0] / dt[0];
        for j in 1..4 {
            assert!((sol.delta[j] / dt[j] - r0).abs() < 1e-10);
        }
        let s0 = sol.delta_tilde[0] / d[0];
        for i in 1..5 {
            assert!((sol.delta_tilde[i] / d[i] - s0).abs() < 1e-10);
        }
        let _ = a;
    }

    #[test]
    fn deltas_decrease_with_noise() {
        let model = random_model(6, 5, 21, 0.5);
        let (lo, _) = solve_deltas(&model, &SolverOptions::default()).unwrap();
        let (hi, _) = solve_deltas(&model.with_zeta(1.0).unwrap(), &SolverOptions::default()).unwrap();
        for j in 0..5 {
            assert!(hi.delta[j] < lo.delta[j]);
        }
    }
}
