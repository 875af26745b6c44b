//! Run configuration (`schema: 1`) and its translation into channel models.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{synth_los, ChannelModel, LosKind};
use crate::error::{Error, Result};
use crate::geometry::{noise_power_from_snr_db, Aperture, ArrayGeometry};
use crate::io;
use crate::linalg::{CMatrix, RMatrix};
use crate::profile::{
    profile_nonseparable_gaussian, profile_rescale_to_match, profile_separable_isotropic,
    VarianceProfile,
};
use crate::solver::SolverOptions;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default = "default_snr")]
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub rates: RatesSpec,
    #[serde(default)]
    pub mc: Option<McConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn default_snr() -> Vec<f64> {
    vec![10.0]
}

/// Geometry with every field optional; missing values follow the reference
/// design (λ = 1 cm, spacing λ/4, patch area λ²/64, τ = 0.6, 10λ apertures).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub wavelength: Option<f64>,
    /// Square aperture side for both arrays, in wavelengths.
    pub side_wavelengths: Option<f64>,
    pub tx_aperture: Option<Aperture>,
    pub rx_aperture: Option<Aperture>,
    pub tx_spacing: Option<f64>,
    pub rx_spacing: Option<f64>,
    pub antenna_area: Option<f64>,
    pub efficiency: Option<f64>,
}

impl GeometryConfig {
    pub fn resolve(&self) -> Result<ArrayGeometry> {
        let wavelength = self.wavelength.unwrap_or(0.01);
        let side = self.side_wavelengths.unwrap_or(10.0) * wavelength;
        let geom = ArrayGeometry {
            wavelength,
            tx_aperture: self.tx_aperture.unwrap_or(Aperture::square(side)),
            rx_aperture: self.rx_aperture.unwrap_or(Aperture::square(side)),
            tx_spacing: self.tx_spacing.unwrap_or(wavelength / 4.0),
            rx_spacing: self.rx_spacing.unwrap_or(wavelength / 4.0),
            antenna_area: self.antenna_area.unwrap_or(wavelength * wavelength / 64.0),
            efficiency: self.efficiency.unwrap_or(0.6),
        };
        geom.validate()?;
        Ok(geom)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Holographic,
    Weichselberger,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSpec {
    Separable,
    #[default]
    Nonseparable,
    /// All-ones profile; Weichselberger only, needs `dims`.
    Iid,
    File(PathBuf),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LosSpec {
    None,
    /// Unit coupling between the matched `(0, 0)` wavenumbers (holographic)
    /// or at entry `(0, 0)` (Weichselberger).
    #[default]
    SingleCoupling,
    LowRank { rank: usize, seed: u64 },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    #[serde(default)]
    pub model: ModelKind,
    #[serde(default)]
    pub profile: ProfileSpec,
    #[serde(default = "one")]
    pub kernel_a: f64,
    /// Rescale the Gaussian-kernel profile to the total power of the
    /// separable one.
    #[serde(default = "yes")]
    pub match_separable_power: bool,
    #[serde(default = "one")]
    pub profile_scale: f64,
    #[serde(default = "ten")]
    pub rician_k: f64,
    #[serde(default)]
    pub los: LosSpec,
    /// `[N, M]` for a Weichselberger `iid` profile.
    #[serde(default)]
    pub dims: Option<[usize; 2]>,
}

fn one() -> f64 {
    1.0
}
fn ten() -> f64 {
    10.0
}
fn yes() -> bool {
    true
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Holographic,
            profile: ProfileSpec::Nonseparable,
            kernel_a: 1.0,
            match_separable_power: true,
            profile_scale: 1.0,
            rician_k: 10.0,
            los: LosSpec::SingleCoupling,
            dims: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoRates {
    Auto,
}

/// Explicit rates in nats, or `"auto"`: `C̄ ± 5√V` with 101 points. An empty
/// list also means `"auto"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RatesSpec {
    Auto(AutoRates),
    List(Vec<f64>),
}

impl Default for RatesSpec {
    fn default() -> Self {
        RatesSpec::Auto(AutoRates::Auto)
    }
}

impl RatesSpec {
    pub fn explicit(&self) -> Option<&[f64]> {
        match self {
            RatesSpec::List(v) if !v.is_empty() => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "one")]
    pub damping: f64,
}

fn default_tol() -> f64 {
    1e-12
}
fn default_max_iter() -> usize {
    10_000
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: default_max_iter(),
            damping: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            damping: self.damping,
            ..SolverOptions::default()
        }
    }
}

/// Channel ingredients that do not depend on the SNR.
#[derive(Debug, Clone)]
pub struct ModelTemplate {
    pub geometry: Option<ArrayGeometry>,
    pub profile: VarianceProfile,
    /// LoS matrix before the `√(k/n_S)` scaling (holographic) or as used
    /// (Weichselberger).
    pub los: CMatrix,
    pub rician_k: f64,
    pub kind: ModelKind,
}

impl ModelTemplate {
    /// Channel model at one SNR.
    pub fn at_snr_db(&self, snr_db: f64) -> Result<ChannelModel> {
        let noise = noise_power_from_snr_db(snr_db);
        match (self.kind, &self.geometry) {
            (ModelKind::Holographic, Some(g)) => {
                ChannelModel::holographic(g, self.profile.clone(), &self.los, self.rician_k, noise)
            }
            _ => ChannelModel::weichselberger(self.los.clone(), self.profile.clone(), noise),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads the file and resolves relative paths inside it against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(base) = path.parent() {
            cfg.rebase_paths(base);
        }
        Ok(cfg)
    }

    fn rebase_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let ProfileSpec::File(p) = &mut self.channel.profile {
            fix(p);
        }
        if let LosSpec::File(p) = &mut self.channel.los {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema {}, expected {SCHEMA_VERSION}",
                self.schema
            )));
        }
        if self.snr_db.is_empty() {
            return Err(Error::Config("snr_db must not be empty".into()));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("snr_db entries must be finite".into()));
        }
        if let Some(rates) = self.rates.explicit() {
            if rates.iter().any(|r| !r.is_finite()) {
                return Err(Error::Config("rates must be finite".into()));
            }
        }
        if let Some(mc) = &self.mc {
            if mc.samples == 0 {
                return Err(Error::Config("mc.samples must be >= 1".into()));
            }
        }
        let s = &self.solver;
        if !(s.tol > 0.0) || s.max_iter == 0 || !(s.damping > 0.0 && s.damping <= 1.0) {
            return Err(Error::Config(
                "solver needs tol > 0, max_iter >= 1 and damping in (0, 1]".into(),
            ));
        }
        let c = &self.channel;
        if !(c.kernel_a > 0.0) || !(c.profile_scale > 0.0) || !(c.rician_k >= 0.0) {
            return Err(Error::Config(
                "channel needs kernel_a > 0, profile_scale > 0 and rician_k >= 0".into(),
            ));
        }
        if c.model == ModelKind::Weichselberger {
            if matches!(c.profile, ProfileSpec::Separable | ProfileSpec::Nonseparable) {
                return Err(Error::Config(
                    "weichselberger model takes an `iid` or `file` profile".into(),
                ));
            }
            if c.profile == ProfileSpec::Iid && c.dims.is_none() {
                return Err(Error::Config("`iid` profile needs `dims`".into()));
            }
        } else if c.profile == ProfileSpec::Iid {
            return Err(Error::Config("`iid` profile is for the weichselberger model".into()));
        }
        Ok(())
    }

    /// Builds the SNR-independent parts of the channel.
    pub fn template(&self) -> Result<ModelTemplate> {
        let c = &self.channel;
        match c.model {
            ModelKind::Holographic => {
                let geom = self.geometry.resolve()?;
                let (rx, tx) = (geom.rx_lattice(), geom.tx_lattice());
                let profile = match &c.profile {
                    ProfileSpec::Separable => profile_separable_isotropic(&rx, &tx)?,
                    ProfileSpec::Nonseparable => {
                        let sep = profile_separable_isotropic(&rx, &tx)?;
                        let ns = profile_nonseparable_gaussian(&sep, &rx, &tx, c.kernel_a)?;
                        if c.match_separable_power {
                            profile_rescale_to_match(&ns, &sep)?
                        } else {
                            ns
                        }
                    }
                    ProfileSpec::File(p) => VarianceProfile::new(io::read_real_matrix(p)?)?,
                    ProfileSpec::Iid => unreachable!("rejected by validate"),
                };
                let profile = scale(profile, c.profile_scale)?;
                let (n, m) = (rx.len(), tx.len());
                let matched = (rx.index_of((0, 0)), tx.index_of((0, 0)));
                let los = match &c.los {
                    LosSpec::SingleCoupling => match matched {
                        (Some(row), Some(col)) => {
                            synth_los(n, m, LosKind::SingleCoupling { row, col }, 0)?
                        }
                        _ => return Err(Error::Numerical("lattice lacks the origin".into())),
                    },
                    other => los_from_spec(other, n, m)?,
                };
                Ok(ModelTemplate {
                    geometry: Some(geom),
                    profile,
                    los,
                    rician_k: c.rician_k,
                    kind: ModelKind::Holographic,
                })
            }
            ModelKind::Weichselberger => {
                let profile = match &c.profile {
                    ProfileSpec::Iid => {
                        let [n, m] = c.dims.expect("checked by validate");
                        VarianceProfile::new(RMatrix::from_element(n, m, 1.0))?
                    }
                    ProfileSpec::File(p) => VarianceProfile::new(io::read_real_matrix(p)?)?,
                    _ => unreachable!("rejected by validate"),
                };
                let profile = scale(profile, c.profile_scale)?;
                let (n, m) = (profile.nrows(), profile.ncols());
                let los = match &c.los {
                    LosSpec::SingleCoupling => {
                        synth_los(n, m, LosKind::SingleCoupling { row: 0, col: 0 }, 0)?
                    }
                    other => los_from_spec(other, n, m)?,
                };
                Ok(ModelTemplate {
                    geometry: None,
                    profile,
                    los,
                    rician_k: c.rician_k,
                    kind: ModelKind::Weichselberger,
                })
            }
        }
    }
}

fn scale(p: VarianceProfile, factor: f64) -> Result<VarianceProfile> {
    if factor == 1.0 {
        Ok(p)
    } else {
        p.scaled(factor)
    }
}

fn los_from_spec(spec: &LosSpec, n: usize, m: usize) -> Result<CMatrix> {
    match spec {
        LosSpec::None => Ok(CMatrix::zeros(n, m)),
        LosSpec::LowRank { rank, seed } => synth_los(n, m, LosKind::LowRank { rank: *rank }, *seed),
        LosSpec::File(p) => {
            let a = io::read_complex_matrix(p)?;
            if a.shape() != (n, m) {
                return Err(Error::Shape(format!(
                    "LoS file is {}x{} but the model is {n}x{m}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            Ok(a)
        }
        LosSpec::SingleCoupling => synth_los(n, m, LosKind::SingleCoupling { row: 0, col: 0 }, 0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_reference_defaults() {
        let cfg = RunConfig::from_json(r#"{"schema": 1}"#).unwrap();
        assert_eq!(cfg.snr_db, vec![10.0]);
        assert_eq!(cfg.channel.rician_k, 10.0);
        assert_eq!(cfg.channel.kernel_a, 1.0);
        assert_eq!(cfg.rates, RatesSpec::default());
        let g = cfg.geometry.resolve().unwrap();
        assert_eq!(g, ArrayGeometry::reference(10.0));
        assert_eq!(cfg.solver.options(), SolverOptions::default());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        for bad in [
            r#"{"schema": 1, "bogus": 0}"#,
            r#"{"schema": 2}"#,
            r#"{"schema": 1, "snr_db": []}"#,
            r#"{"schema": 1, "mc": {"samples": 0}}"#,
            r#"{"schema": 1, "solver": {"damping": 0}}"#,
            r#"{"schema": 1, "channel": {"kernel": 1}}"#,
            r#"{"schema": 1, "rates": "sometimes"}"#,
            r#"{"schema": 1, "channel": {"model": "weichselberger"}}"#,
            r#"{"schema": 1, "channel": {"model": "weichselberger", "profile": "iid"}}"#,
            r#"not json"#,
        ] {
            assert!(matches!(RunConfig::from_json(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn rates_forms() {
        let auto = RunConfig::from_json(r#"{"schema": 1, "rates": "auto"}"#).unwrap();
        assert!(auto.rates.explicit().is_none());
        let empty = RunConfig::from_json(r#"{"schema": 1, "rates": []}"#).unwrap();
        assert!(empty.rates.explicit().is_none());
        let list = RunConfig::from_json(r#"{"schema": 1, "rates": [1.5, 2]}"#).unwrap();
        assert_eq!(list.rates.explicit(), Some(&[1.5, 2.0][..]));
    }

    #[test]
    fn iid_weichselberger_template() {
        let cfg = RunConfig::from_json(
            r#"{"schema": 1, "snr_db": [0],
                "channel": {"model": "weichselberger", "profile": "iid", "dims": [3, 2], "los": "none"}}"#,
        )
        .unwrap();
        let model = cfg.template().unwrap().at_snr_db(0.0).unwrap();
        assert_eq!((model.n(), model.m()), (3, 2));
        assert_eq!(model.zeta(), 1.0);
        assert_eq!(model.los_norm(), 0.0);
    }

    #[test]
    fn holographic_template_small_aperture() {
        let cfg = RunConfig::from_json(
            r#"{"schema": 1, "geometry": {"side_wavelengths": 1.0}, "channel": {"rician_k": 5}}"#,
        )
        .unwrap();
        let t = cfg.template().unwrap();
        assert_eq!(t.profile.nrows(), 5);
        let model = t.at_snr_db(10.0).unwrap();
        let centre = 2;
        assert!((model.los()[(centre, centre)].re - (5.0f64 / 5.0).sqrt()).abs() < 1e-15);
        assert!((model.profile().total() - 1.0).abs() < 1e-12);
    }
}
