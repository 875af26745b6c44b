//! Variance profiles `Σ` of the random channel component and the
//! generators used for holographic arrays.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::WavenumberLattice;
use crate::linalg::RMatrix;

/// Entries below this fraction of the largest entry are raised to it.
pub const PROFILE_FLOOR: f64 = 1e-12;

/// Relative tolerance of the rank-one test used to tag a profile separable.
pub const SEPARABLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Separable,
    Nonseparable,
    User,
}

/// `N × M` matrix of per-entry variances `σ²_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceProfile {
    sigma: RMatrix,
    kind: ProfileKind,
    /// `(d, d̃)` with `Σ = d d̃ᵀ`, kept for separable profiles.
    factors: Option<(Vec<f64>, Vec<f64>)>,
    /// Entrywise square root `Σ^{∘½}`.
    amplitude: RMatrix,
}

impl VarianceProfile {
    /// Wraps a user-supplied matrix. Every entry must be finite and strictly
    /// positive; the kind is detected (rank one ⇒ separable).
    pub fn new(sigma: RMatrix) -> Result<Self> {
        check_entries(&sigma)?;
        let factors = rank_one_factors(&sigma);
        let kind = if factors.is_some() {
            ProfileKind::Separable
        } else {
            ProfileKind::User
        };
        let amplitude = sigma.map(f64::sqrt);
        Ok(Self {
            sigma,
            kind,
            factors,
            amplitude,
        })
    }

    /// `Σ = d d̃ᵀ`. The amplitude is formed from the factor square roots so
    /// that `Σ^{∘½} ⊙ X` and `D^{½} X D̃^{½}` agree entry for entry.
    pub fn separable(d: Vec<f64>, d_tilde: Vec<f64>) -> Result<Self> {
        if d.is_empty() || d_tilde.is_empty() {
            return Err(Error::Shape("empty separable factor".into()));
        }
        let sigma = RMatrix::from_fn(d.len(), d_tilde.len(), |i, j| d[i] * d_tilde[j]);
        check_entries(&sigma)?;
        let sd: Vec<f64> = d.iter().map(|x| x.sqrt()).collect();
        let sdt: Vec<f64> = d_tilde.iter().map(|x| x.sqrt()).collect();
        let amplitude = RMatrix::from_fn(d.len(), d_tilde.len(), |i, j| sd[i] * sdt[j]);
        Ok(Self {
            sigma,
            kind: ProfileKind::Separable,
            factors: Some((d, d_tilde)),
            amplitude,
        })
    }

    /// Same as [`Self::new`] but entries below `PROFILE_FLOOR · max` (zeros
    /// included) are raised to that floor, with a warning.
    pub fn with_floor(mut sigma: RMatrix, kind: ProfileKind) -> Result<Self> {
        let max = sigma.iter().cloned().fold(0.0_f64, f64::max);
        if !(max.is_finite() && max > 0.0) {
            return Err(Error::Assumption {
                assumption: "A.2",
                detail: "variance profile has no positive entry".into(),
            });
        }
        let floor = PROFILE_FLOOR * max;
        let mut raised = 0usize;
        for v in sigma.iter_mut() {
            if *v < floor {
                *v = floor;
                raised += 1;
            }
        }
        if raised > 0 {
            warn!("raised {raised} variance-profile entries to the floor {floor:e}");
        }
        let mut p = Self::new(sigma)?;
        if kind != ProfileKind::User && p.kind != ProfileKind::Separable {
            p.kind = kind;
        }
        Ok(p)
    }

    pub fn nrows(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.sigma.ncols()
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.sigma
    }

    pub fn amplitude(&self) -> &RMatrix {
        &self.amplitude
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn factors(&self) -> Option<(&[f64], &[f64])> {
        self.factors.as_ref().map(|(d, dt)| (d.as_slice(), dt.as_slice()))
    }

    pub fn max_entry(&self) -> f64 {
        self.sigma.max()
    }

    pub fn min_entry(&self) -> f64 {
        self.sigma.min()
    }

    pub fn total(&self) -> f64 {
        self.sigma.sum()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::Domain(format!("profile scale must be positive, got {factor}")));
        }
        match &self.factors {
            Some((d, dt)) if self.amplitude_is_factored() => Self::separable(
                d.iter().map(|x| x * factor).collect(),
                dt.clone(),
            ),
            _ => {
                let mut p = Self::new(&self.sigma * factor)?;
                p.kind = self.kind;
                Ok(p)
            }
        }
    }

    fn amplitude_is_factored(&self) -> bool {
        match &self.factors {
            Some((d, dt)) => {
                let (n, m) = (d.len(), dt.len());
                n > 0 && m > 0 && self.amplitude[(0, 0)] == d[0].sqrt() * dt[0].sqrt()
                    && self.amplitude[(n - 1, m - 1)] == d[n - 1].sqrt() * dt[m - 1].sqrt()
            }
            None => false,
        }
    }
}

fn check_entries(sigma: &RMatrix) -> Result<()> {
    if sigma.is_empty() {
        return Err(Error::Shape("empty variance profile".into()));
    }
    for i in 0..sigma.nrows() {
        for j in 0..sigma.ncols() {
            let v = sigma[(i, j)];
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Assumption {
                    assumption: "A.2",
                    detail: format!(
                        "variance profile entry ({i}, {j}) = {v} is not strictly positive"
                    ),
                });
            }
        }
    }
    Ok(())
}

/// `(d, d̃)` with `Σ ≈ d d̃ᵀ` when `Σ` is rank one within [`SEPARABLE_TOL`].
fn rank_one_factors(sigma: &RMatrix) -> Option<(Vec<f64>, Vec<f64>)> {
    let total = sigma.sum();
    let rows: Vec<f64> = sigma.row_iter().map(|r| r.sum()).collect();
    let cols: Vec<f64> = sigma.column_iter().map(|c| c.sum()).collect();
    let max = sigma.max();
    for i in 0..sigma.nrows() {
        for j in 0..sigma.ncols() {
            let fit = rows[i] * cols[j] / total;
            if (sigma[(i, j)] - fit).abs() > SEPARABLE_TOL * max {
                return None;
            }
        }
    }
    let d = rows.iter().map(|r| r / total.sqrt()).collect();
    let dt = cols.iter().map(|c| c / total.sqrt()).collect();
    Some((d, dt))
}

/// Unnormalized measure of one lattice cell: the integral of
/// `1/√(1 − u² − v²)` over `[(m_x − ½)/a_x, (m_x + ½)/a_x] × [(m_y − ½)/a_y,
/// (m_y + ½)/a_y]` intersected with the unit disk, where `(u, v)` are the
/// horizontal wavenumbers normalized by `2π/λ` and `a = L/λ`.
///
/// This is the solid angle subtended by the cell (the integrand is
/// `κ/γ(κ_x, κ_y)` in normalized units). The `v` integral is done in closed
/// form; the remaining `u` integral is split at every kink of the integrand,
/// mapped through a smoothstep substitution to tame the square-root
/// endpoint behavior, and evaluated with midpoint refinement until two
/// successive resolutions agree to `1e-8` relative.
pub fn cell_solid_angle(mx: i64, my: i64, semi_x: f64, semi_y: f64) -> f64 {
    let u0 = ((mx as f64 - 0.5) / semi_x).max(-1.0);
    let u1 = ((mx as f64 + 0.5) / semi_x).min(1.0);
    let v0 = (my as f64 - 0.5) / semi_y;
    let v1 = (my as f64 + 0.5) / semi_y;
    if u0 >= u1 {
        return 0.0;
    }
    // Kinks: where the circle crosses v = v0 or v = v1.
    let mut breaks = vec![u0, u1];
    for v in [v0, v1] {
        if v.abs() < 1.0 {
            let c = (1.0 - v * v).sqrt();
            for u in [-c, c] {
                if u > u0 && u < u1 {
                    breaks.push(u);
                }
            }
        }
    }
    if 0.0 > u0 && 0.0 < u1 {
        breaks.push(0.0);
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();

    let inner = |u: f64| -> f64 {
        let c2 = 1.0 - u * u;
        if c2 <= 0.0 {
            return 0.0;
        }
        let c = c2.sqrt();
        let lo = (v0 / c).clamp(-1.0, 1.0);
        let hi = (v1 / c).clamp(-1.0, 1.0);
        hi.asin() - lo.asin()
    };

    breaks
        .windows(2)
        .map(|w| midpoint_smoothstep(&inner, w[0], w[1], 1e-8))
        .sum()
}

/// `∫_a^b f` via `u = a + (b − a)(3s² − 2s³)` and the midpoint rule on `s`,
/// doubling the number of nodes until the relative change is below `rtol`.
fn midpoint_smoothstep(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rtol: f64) -> f64 {
    let width = b - a;
    if width <= 0.0 {
        return 0.0;
    }
    let eval = |n: usize| -> f64 {
        let h = 1.0 / n as f64;
        let mut acc = 0.0;
        for k in 0..n {
            let s = (k as f64 + 0.5) * h;
            let u = a + width * s * s * (3.0 - 2.0 * s);
            let jac = width * 6.0 * s * (1.0 - s);
            acc += f(u) * jac;
        }
        acc * h
    };
    let mut n = 16;
    let mut prev = eval(n);
    loop {
        n *= 2;
        let cur = eval(n);
        if (cur - prev).abs() <= rtol * cur.abs() || n >= 1 << 22 {
            return cur;
        }
        prev = cur;
    }
}

/// Per-cell solid-angle weights of a lattice, normalized to unit sum.
pub fn isotropic_weights(lattice: &WavenumberLattice) -> Result<Vec<f64>> {
    let raw: Vec<f64> = lattice
        .points
        .iter()
        .map(|&(mx, my)| cell_solid_angle(mx, my, lattice.semi_x, lattice.semi_y))
        .collect();
    if let Some(pos) = raw.iter().position(|&w| !(w > 0.0)) {
        return Err(Error::Numerical(format!(
            "lattice cell {:?} has no overlap with the propagation disk",
            lattice.points[pos]
        )));
    }
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Separable isotropic profile `σ²_{ij} = σ²_R(l_i) σ²_S(m_j)` with each side
/// given by [`isotropic_weights`].
pub fn profile_separable_isotropic(
    rx: &WavenumberLattice,
    tx: &WavenumberLattice,
) -> Result<VarianceProfile> {
    if rx.is_empty() || tx.is_empty() {
        return Err(Error::Shape("empty lattice".into()));
    }
    VarianceProfile::separable(isotropic_weights(rx)?, isotropic_weights(tx)?)
}

/// Gaussian-kernel coupling of a separable profile:
/// `σ²(l, m) = σ²_R(l) σ²_S(m) exp(−((l_x − m_x)² + (l_y − m_y)²)/a)`.
pub fn profile_nonseparable_gaussian(
    sep: &VarianceProfile,
    rx: &WavenumberLattice,
    tx: &WavenumberLattice,
    kernel_scale: f64,
) -> Result<VarianceProfile> {
    if !(kernel_scale.is_finite() && kernel_scale > 0.0) {
        return Err(Error::Domain(format!(
            "kernel scale must be positive, got {kernel_scale}"
        )));
    }
    let (d, dt) = sep.factors().ok_or_else(|| {
        Error::Domain("Gaussian-kernel profile needs a separable input".into())
    })?;
    if d.len() != rx.len() || dt.len() != tx.len() {
        return Err(Error::Shape(format!(
            "profile {}x{} does not match lattices {}x{}",
            d.len(),
            dt.len(),
            rx.len(),
            tx.len()
        )));
    }
    let sigma = RMatrix::from_fn(rx.len(), tx.len(), |i, j| {
        let (lx, ly) = rx.points[i];
        let (mx, my) = tx.points[j];
        let dist2 = ((lx - mx).pow(2) + (ly - my).pow(2)) as f64;
        d[i] * dt[j] * (-dist2 / kernel_scale).exp()
    });
    VarianceProfile::with_floor(sigma, ProfileKind::Nonseparable)
}

/// `target` scaled so its total power equals that of `reference`.
pub fn profile_rescale_to_match(
    target: &VarianceProfile,
    reference: &VarianceProfile,
) -> Result<VarianceProfile> {
    if target.nrows() != reference.nrows() || target.ncols() != reference.ncols() {
        return Err(Error::Shape("profiles differ in shape".into()));
    }
    let t = target.total();
    if !(t > 0.0) {
        return Err(Error::Domain("target profile has zero total power".into()));
    }
    target.scaled(reference.total() / t)
}
