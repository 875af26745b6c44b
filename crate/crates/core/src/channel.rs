//! The unified channel `H = A + Σ^{∘½} ⊙ X` and its builders.
//!
//! Both the Rician-Weichselberger channel and the angular-domain holographic
//! channel reduce to this object: the mutual information only depends on the
//! LoS matrix `A`, the variance profile `Σ` and the noise parameter `ζ`. The
//! unitary side factors of the Weichselberger model and the Fourier bases of
//! the holographic model drop out of `log det(I + HH^H/ζ)`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, ArrayGeometry};
use crate::linalg::{spectral_norm, CMatrix};
use crate::profile::VarianceProfile;

/// Bounds on `M/N` accepted as "same pace" growth.
const MAX_ASPECT: f64 = 1e3;

#[derive(Debug, Clone)]
pub struct ChannelModel {
    los: CMatrix,
    profile: VarianceProfile,
    zeta: f64,
    rician_k: f64,
    los_norm: f64,
}

impl ChannelModel {
    /// Generic constructor; checks shapes, `ζ > 0` and the dimension ratio.
    pub fn new(los: CMatrix, profile: VarianceProfile, zeta: f64) -> Result<Self> {
        if los.shape() != (profile.nrows(), profile.ncols()) {
            return Err(Error::Shape(format!(
                "LoS matrix is {}x{} but the variance profile is {}x{}",
                los.nrows(),
                los.ncols(),
                profile.nrows(),
                profile.ncols()
            )));
        }
        if !(zeta.is_finite() && zeta > 0.0) {
            return Err(Error::Domain(format!("zeta must be positive, got {zeta}")));
        }
        let ratio = profile.ncols() as f64 / profile.nrows() as f64;
        if !(1.0 / MAX_ASPECT..=MAX_ASPECT).contains(&ratio) {
            return Err(Error::Assumption {
                assumption: "A.1",
                detail: format!("M/N = {ratio} is out of range"),
            });
        }
        let los_norm = spectral_norm(&los);
        if !los_norm.is_finite() {
            return Err(Error::Assumption {
                assumption: "A.3",
                detail: "LoS matrix has a non-finite norm".into(),
            });
        }
        Ok(Self {
            los,
            profile,
            zeta,
            rician_k: 0.0,
            los_norm,
        })
    }

    /// Rician-Weichselberger channel in its eigenbasis: `A = Ā_W`, `Σ = Σ_W`,
    /// `ζ = σ²`.
    pub fn weichselberger(a_bar: CMatrix, profile: VarianceProfile, noise: f64) -> Result<Self> {
        Self::new(a_bar, profile, noise)
    }

    /// Rician-Kronecker channel with diagonal correlations `D = diag(d)`,
    /// `D̃ = diag(d̃)`; the special case `Σ = d d̃ᵀ` of the Weichselberger model.
    pub fn kronecker(a: CMatrix, d: Vec<f64>, d_tilde: Vec<f64>, noise: f64) -> Result<Self> {
        Self::new(a, VarianceProfile::separable(d, d_tilde)?, noise)
    }

    /// Angular-domain holographic channel: `A = √(k/n_S)·A_h` and
    /// `ζ = σ²/(G_R G_S N_R N_S)`.
    pub fn holographic(
        geom: &ArrayGeometry,
        profile: VarianceProfile,
        a_h: &CMatrix,
        rician_k: f64,
        noise: f64,
    ) -> Result<Self> {
        geom.validate()?;
        let (n_r, n_s) = (geom.rx_lattice().len(), geom.tx_lattice().len());
        if profile.nrows() != n_r || profile.ncols() != n_s {
            return Err(Error::Shape(format!(
                "profile is {}x{} but the lattices give {n_r}x{n_s}",
                profile.nrows(),
                profile.ncols()
            )));
        }
        if a_h.shape() != (n_r, n_s) {
            return Err(Error::Shape(format!(
                "LoS matrix is {}x{} but the lattices give {n_r}x{n_s}",
                a_h.nrows(),
                a_h.ncols()
            )));
        }
        if !(rician_k.is_finite() && rician_k >= 0.0) {
            return Err(Error::Domain(format!("Rician factor must be >= 0, got {rician_k}")));
        }
        let zeta = geometry::effective_zeta(geom, noise)?;
        let los = a_h * Complex64::new((rician_k / n_s as f64).sqrt(), 0.0);
        let mut model = Self::new(los, profile, zeta)?;
        model.rician_k = rician_k;
        Ok(model)
    }

    /// Same model with a different noise parameter.
    pub fn with_zeta(&self, zeta: f64) -> Result<Self> {
        if !(zeta.is_finite() && zeta > 0.0) {
            return Err(Error::Domain(format!("zeta must be positive, got {zeta}")));
        }
        let mut m = self.clone();
        m.zeta = zeta;
        Ok(m)
    }

    /// Receive dimension `N`.
    pub fn n(&self) -> usize {
        self.los.nrows()
    }

    /// Transmit dimension `M`.
    pub fn m(&self) -> usize {
        self.los.ncols()
    }

    pub fn los(&self) -> &CMatrix {
        &self.los
    }

    pub fn profile(&self) -> &VarianceProfile {
        &self.profile
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn rician_k(&self) -> f64 {
        self.rician_k
    }

    /// `‖A‖`, the bound `a_max` of assumption A.3 for this instance.
    pub fn los_norm(&self) -> f64 {
        self.los_norm
    }

    /// `A + Σ^{∘½} ⊙ X`.
    pub fn channel_from_noise(&self, x: &CMatrix) -> CMatrix {
        let amp = self.profile.amplitude();
        CMatrix::from_fn(self.n(), self.m(), |i, j| self.los[(i, j)] + x[(i, j)] * amp[(i, j)])
    }

    /// `A + D^{½} X D̃^{½}` for a separable profile; `None` otherwise.
    pub fn kronecker_channel_from_noise(&self, x: &CMatrix) -> Option<CMatrix> {
        let (d, dt) = self.profile.factors()?;
        let sd: Vec<f64> = d.iter().map(|v| v.sqrt()).collect();
        let sdt: Vec<f64> = dt.iter().map(|v| v.sqrt()).collect();
        Some(CMatrix::from_fn(self.n(), self.m(), |i, j| {
            self.los[(i, j)] + x[(i, j)] * (sd[i] * sdt[j])
        }))
    }
}

/// Synthetic LoS structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LosKind {
    /// A single unit coupling coefficient at `(row, col)`.
    SingleCoupling { row: usize, col: usize },
    /// Sum of `rank` outer products of random unit vectors, rescaled to unit
    /// spectral norm.
    LowRank { rank: usize },
}

/// Deterministic-for-seed LoS matrix with `‖A‖ = 1`.
pub fn synth_los(n_r: usize, n_s: usize, kind: LosKind, seed: u64) -> Result<CMatrix> {
    if n_r == 0 || n_s == 0 {
        return Err(Error::Shape("LoS dimensions must be >= 1".into()));
    }
    match kind {
        LosKind::SingleCoupling { row, col } => {
            if row >= n_r || col >= n_s {
                return Err(Error::Domain(format!(
                    "coupling position ({row}, {col}) outside {n_r}x{n_s}"
                )));
            }
            let mut a = CMatrix::zeros(n_r, n_s);
            a[(row, col)] = Complex64::new(1.0, 0.0);
            Ok(a)
        }
        LosKind::LowRank { rank } => {
            if rank == 0 || rank > n_r.min(n_s) {
                return Err(Error::Domain(format!(
                    "rank {rank} outside 1..={}",
                    n_r.min(n_s)
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut unit = |len: usize| -> CMatrix {
                let v = CMatrix::from_fn(len, 1, |_, _| {
                    Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
                });
                let norm = v.norm();
                v.unscale(norm)
            };
            let mut a = CMatrix::zeros(n_r, n_s);
            for _ in 0..rank {
                let u = unit(n_r);
                let v = unit(n_s);
                a += &u * v.adjoint();
            }
            let norm = spectral_norm(&a);
            if !(norm > 0.0) {
                return Err(Error::Numerical("degenerate low-rank LoS draw".into()));
            }
            Ok(a.unscale(norm))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ArrayGeometry;
    use crate::linalg::RMatrix;
    use crate::profile::{profile_separable_isotropic, ProfileKind};

    /// Largest singular value by power iteration on `A^H A`.
    fn power_norm(a: &CMatrix) -> f64 {
        let mut v = CMatrix::from_element(a.ncols(), 1, Complex64::new(1.0, 0.3));
        let mut lambda = 0.0;
        for _ in 0..2000 {
            let w = a.adjoint() * (a * &v);
            lambda = w.norm() / v.norm();
            v = w.unscale(w.norm());
        }
        lambda.sqrt()
    }

    #[test]
    fn single_coupling_is_unit_entry() {
        let a = synth_los(3, 3, LosKind::SingleCoupling { row: 0, col: 0 }, 0).unwrap();
        let mut e = CMatrix::zeros(3, 3);
        e[(0, 0)] = Complex64::new(1.0, 0.0);
        assert_eq!(a, e);
        assert!((spectral_norm(&a) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn low_rank_has_unit_norm_and_rank() {
        for (seed, (n, m, r)) in [(5, 4, 1), (8, 6, 3), (12, 12, 5), (3, 9, 2)].into_iter().enumerate() {
            let a = synth_los(n, m, LosKind::LowRank { rank: r }, seed as u64).unwrap();
            assert!((power_norm(&a) - 1.0).abs() < 1e-12);
            let sv = a.clone().singular_values();
            let numeric_rank = sv.iter().filter(|&&s| s > 1e-10).count();
            assert_eq!(numeric_rank, r);
        }
        let a = synth_los(4, 4, LosKind::LowRank { rank: 2 }, 7).unwrap();
        let b = synth_los(4, 4, LosKind::LowRank { rank: 2 }, 7).unwrap();
        assert_eq!(a, b);
        assert!(synth_los(4, 4, LosKind::LowRank { rank: 5 }, 0).is_err());
        assert!(synth_los(4, 4, LosKind::LowRank { rank: 0 }, 0).is_err());
    }

    #[test]
    fn centered_iid_weichselberger() {
        let p = VarianceProfile::new(RMatrix::from_element(3, 3, 1.0)).unwrap();
        assert_eq!(p.kind(), ProfileKind::Separable);
        let model = ChannelModel::weichselberger(CMatrix::zeros(3, 3), p, 0.1).unwrap();
        assert_eq!(model.los_norm(), 0.0);
        assert_eq!(model.zeta(), 0.1);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let p = VarianceProfile::new(RMatrix::from_element(3, 2, 1.0)).unwrap();
        assert!(matches!(
            ChannelModel::weichselberger(CMatrix::zeros(3, 3), p, 0.1),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn holographic_scaling() {
        let geom = ArrayGeometry::reference(1.5);
        let (rx, tx) = (geom.rx_lattice(), geom.tx_lattice());
        let p = profile_separable_isotropic(&rx, &tx).unwrap();
        let a_h = synth_los(rx.len(), tx.len(), LosKind::LowRank { rank: 2 }, 1).unwrap();

        let centered = ChannelModel::holographic(&geom, p.clone(), &a_h, 0.0, 0.1).unwrap();
        assert_eq!(centered.los_norm(), 0.0);

        let rician = ChannelModel::holographic(&geom, p, &a_h, 10.0, 0.1).unwrap();
        let expected = (10.0 / tx.len() as f64).sqrt();
        assert!((rician.los_norm() - expected).abs() < 1e-12);
        assert_eq!(rician.zeta(), geometry::effective_zeta(&geom, 0.1).unwrap());
    }

    #[test]
    fn kronecker_and_general_forms_agree_exactly() {
        let d = vec![0.3, 1.1, 2.5, 0.7];
        let dt = vec![1.9, 0.2, 0.6];
        let a = synth_los(4, 3, LosKind::LowRank { rank: 2 }, 3).unwrap();
        let model = ChannelModel::kronecker(a, d, dt, 0.5).unwrap();
        let x = CMatrix::from_fn(4, 3, |i, j| Complex64::new(0.1 * i as f64 - 0.3, 0.07 * j as f64 + 0.01));
        let general = model.channel_from_noise(&x);
        let kron = model.kronecker_channel_from_noise(&x).unwrap();
        assert_eq!(general, kron);
    }
}
