//! Dense linear-algebra helpers shared by the solver, the asymptotic
//! statistics and the Monte-Carlo engine.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;
pub type RVector = DVector<f64>;

/// Largest imaginary part tolerated on the diagonal of a Hermitian matrix
/// before it is reported as a numerical failure.
pub const HERMITIAN_DIAG_IMAG_TOL: f64 = 1e-10;

/// Cholesky factor of a Hermitian positive definite matrix. The complex
/// factorization in nalgebra takes square roots of negative pivots without
/// failing, so the pivots are checked here.
pub fn hpd_cholesky(m: &CMatrix) -> Result<Cholesky<Complex64, Dyn>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Shape(format!("expected a square matrix, got {}x{}", n, m.ncols())));
    }
    let fail = || {
        Error::Numerical(format!(
            "matrix is not Hermitian positive definite (n = {n}, {})",
            condition_hint(m)
        ))
    };
    let chol = m.clone().cholesky().ok_or_else(fail)?;
    let l = chol.l_dirty();
    for i in 0..n {
        let d = l[(i, i)];
        if !(d.re > 0.0 && d.re.is_finite()) || d.im.abs() > 1e-8 * d.re {
            return Err(fail());
        }
    }
    Ok(chol)
}

/// `log det(M)` for a Hermitian positive definite `M`, via Cholesky.
pub fn hermitian_logdet(m: &CMatrix) -> Result<f64> {
    let chol = hpd_cholesky(m)?;
    let l = chol.l_dirty();
    Ok((0..m.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum())
}

/// Inverse of a Hermitian positive definite matrix. The result is
/// re-symmetrized so that it is Hermitian to rounding.
pub fn hermitian_inverse(m: &CMatrix) -> Result<CMatrix> {
    Ok(hermitian_part(&hpd_cholesky(m)?.inverse()))
}

/// `(M + M^H) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Real diagonal of a Hermitian matrix. Fails if an imaginary part exceeds
/// [`HERMITIAN_DIAG_IMAG_TOL`] relative to the entry.
pub fn real_diagonal(m: &CMatrix) -> Result<RVector> {
    let n = m.nrows().min(m.ncols());
    let mut out = RVector::zeros(n);
    for i in 0..n {
        let z = m[(i, i)];
        if z.im.abs() > HERMITIAN_DIAG_IMAG_TOL * z.re.abs().max(1.0) {
            return Err(Error::Numerical(format!(
                "diagonal entry {i} has imaginary part {:e}",
                z.im
            )));
        }
        out[i] = z.re;
    }
    Ok(out)
}

/// Sign and log-magnitude of the determinant of a real square matrix,
/// computed with partial-pivoting LU.
pub fn real_logdet_lu(m: &RMatrix) -> Result<(f64, f64)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Shape(format!("det of {}x{} matrix", n, m.ncols())));
    }
    if n == 0 {
        return Ok((1.0, 0.0));
    }
    let lu = m.clone().lu();
    let mut sign: f64 = lu.p().determinant();
    let u = lu.u();
    let mut logabs = 0.0;
    for i in 0..n {
        let d = u[(i, i)];
        if d == 0.0 {
            return Ok((0.0, f64::NEG_INFINITY));
        }
        if d < 0.0 {
            sign = -sign;
        }
        logabs += d.abs().ln();
    }
    Ok((sign, logabs))
}

/// Solve a real square system with partial-pivoting LU.
pub fn real_solve(m: &RMatrix, rhs: &RVector) -> Result<RVector> {
    m.clone()
        .lu()
        .solve(rhs)
        .ok_or_else(|| Error::Numerical("singular linear system".into()))
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0_f64, |acc, &s| acc.max(s))
}

/// Largest entry magnitude of `m - m^H`.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Ratio of extreme diagonal magnitudes, a cheap conditioning proxy used in
/// diagnostics only.
fn condition_hint(m: &CMatrix) -> String {
    let diag: Vec<f64> = (0..m.nrows()).map(|i| m[(i, i)].re).collect();
    let max = diag.iter().cloned().fold(f64::MIN, f64::max);
    let min = diag.iter().cloned().fold(f64::MAX, f64::min);
    format!("diagonal range [{min:e}, {max:e}]")
}

/// `log det(I + G / zeta)` with `G` the Gram matrix of `vectors`, which holds
/// `count` contiguous vectors of length `len`:
/// `G[a][b] = sum_t conj(v_a[t]) v_b[t]`.
///
/// This is the Monte-Carlo hot path; `scratch` must hold at least
/// `count * count` entries and is overwritten.
pub fn gram_logdet(
    vectors: &[Complex64],
    count: usize,
    len: usize,
    inv_zeta: f64,
    scratch: &mut [Complex64],
) -> Result<f64> {
    debug_assert!(vectors.len() >= count * len);
    debug_assert!(scratch.len() >= count * count);
    let g = &mut scratch[..count * count];
    // Lower triangle, row-major: g[i * count + j] for j <= i.
    for i in 0..count {
        let vi = &vectors[i * len..(i + 1) * len];
        for j in 0..=i {
            let vj = &vectors[j * len..(j + 1) * len];
            let mut acc = Complex64::new(0.0, 0.0);
            for (x, y) in vi.iter().zip(vj) {
                acc += x.conj() * y;
            }
            g[i * count + j] = acc * inv_zeta;
        }
        g[i * count + i] += 1.0;
    }
    // In-place Cholesky G = L L^H on the lower triangle.
    let mut logdet = 0.0;
    for j in 0..count {
        let mut s = g[j * count + j].re;
        for k in 0..j {
            s -= g[j * count + k].norm_sqr();
        }
        if !(s > 0.0) {
            return Err(Error::Numerical(format!(
                "Cholesky pivot {j} is not positive ({s:e})"
            )));
        }
        logdet += s.ln();
        let ljj = s.sqrt();
        g[j * count + j] = Complex64::new(ljj, 0.0);
        let inv = 1.0 / ljj;
        for i in (j + 1)..count {
            let mut acc = g[i * count + j];
            for k in 0..j {
                acc -= g[i * count + k] * g[j * count + k].conj();
            }
            g[i * count + j] = acc * inv;
        }
    }
    Ok(logdet)
}
