//! Planar holographic array geometry: antenna counts, the wavenumber lattice
//! ellipse, patch antenna gain and the effective noise parameter.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack on the ellipse membership test so that lattice points lying exactly
/// on the boundary (e.g. (6, 8) for a 10λ aperture) survive the rounding of
/// `L / λ`.
const ELLIPSE_SLACK: f64 = 1e-12;

/// Rectangular aperture `L_x × L_y`, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aperture {
    pub lx: f64,
    pub ly: f64,
}

impl Aperture {
    pub fn square(side: f64) -> Self {
        Self { lx: side, ly: side }
    }
}

/// Transmit and receive planar arrays sharing one wavelength and one patch
/// antenna design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    /// Wavelength λ, meters.
    pub wavelength: f64,
    pub tx_aperture: Aperture,
    pub rx_aperture: Aperture,
    /// Element spacing Δ_S, meters.
    pub tx_spacing: f64,
    /// Element spacing Δ_R, meters.
    pub rx_spacing: f64,
    /// Patch area S_a, m².
    pub antenna_area: f64,
    /// Antenna efficiency τ ∈ (0, 1).
    pub efficiency: f64,
}

impl ArrayGeometry {
    /// Defaults used throughout the simulations: 30 GHz (λ = 1 cm), spacing
    /// λ/4, patch side λ/8 (area λ²/64), efficiency 0.6, square apertures of
    /// side `side_in_wavelengths · λ` at both ends.
    pub fn reference(side_in_wavelengths: f64) -> Self {
        let wavelength = 0.01;
        Self {
            wavelength,
            tx_aperture: Aperture::square(side_in_wavelengths * wavelength),
            rx_aperture: Aperture::square(side_in_wavelengths * wavelength),
            tx_spacing: wavelength / 4.0,
            rx_spacing: wavelength / 4.0,
            antenna_area: wavelength * wavelength / 64.0,
            efficiency: 0.6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lengths = [
            ("wavelength", self.wavelength),
            ("tx_aperture.lx", self.tx_aperture.lx),
            ("tx_aperture.ly", self.tx_aperture.ly),
            ("rx_aperture.lx", self.rx_aperture.lx),
            ("rx_aperture.ly", self.rx_aperture.ly),
            ("tx_spacing", self.tx_spacing),
            ("rx_spacing", self.rx_spacing),
            ("antenna_area", self.antenna_area),
        ];
        for (name, v) in lengths {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.efficiency > 0.0 && self.efficiency < 1.0) {
            return Err(Error::Domain(format!(
                "efficiency must lie in (0, 1), got {}",
                self.efficiency
            )));
        }
        let side = self.antenna_area.sqrt();
        for (name, spacing) in [("tx_spacing", self.tx_spacing), ("rx_spacing", self.rx_spacing)] {
            if spacing < side * (1.0 - 1e-12) {
                return Err(Error::Domain(format!(
                    "{name} = {spacing} is smaller than the antenna side {side}"
                )));
            }
        }
        let (ns, nr) = self.antenna_counts();
        if ns == 0 || nr == 0 {
            return Err(Error::Domain("aperture smaller than one antenna spacing".into()));
        }
        Ok(())
    }

    /// `(N_S, N_R)`: number of antennas on each array, `round(L_x/Δ)·round(L_y/Δ)`.
    pub fn antenna_counts(&self) -> (usize, usize) {
        let count = |a: &Aperture, d: f64| {
            ((a.lx / d).round() as usize) * ((a.ly / d).round() as usize)
        };
        (
            count(&self.tx_aperture, self.tx_spacing),
            count(&self.rx_aperture, self.rx_spacing),
        )
    }

    pub fn tx_lattice(&self) -> WavenumberLattice {
        enumerate_lattice(self.tx_aperture.lx, self.tx_aperture.ly, self.wavelength)
    }

    pub fn rx_lattice(&self) -> WavenumberLattice {
        enumerate_lattice(self.rx_aperture.lx, self.rx_aperture.ly, self.wavelength)
    }
}

/// Integer wavenumber pairs inside the propagation ellipse of one array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavenumberLattice {
    /// `(m_x, m_y)`, sorted lexicographically.
    pub points: Vec<(i64, i64)>,
    /// Semi-axis `L_x / λ`.
    pub semi_x: f64,
    /// Semi-axis `L_y / λ`.
    pub semi_y: f64,
}

impl WavenumberLattice {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Area-law estimate `⌈π L_x L_y / λ²⌉` of the cardinality.
    pub fn ceiling_estimate(&self) -> usize {
        (PI * self.semi_x * self.semi_y).ceil() as usize
    }

    /// Position of `(m_x, m_y)` in [`Self::points`].
    pub fn index_of(&self, point: (i64, i64)) -> Option<usize> {
        self.points.binary_search(&point).ok()
    }
}

/// All integer pairs with `(m_x λ/L_x)² + (m_y λ/L_y)² ≤ 1`, sorted by `m_x`
/// then `m_y`. The origin is always included.
pub fn enumerate_lattice(lx: f64, ly: f64, wavelength: f64) -> WavenumberLattice {
    let semi_x = lx / wavelength;
    let semi_y = ly / wavelength;
    let bx = (semi_x + 1e-9).floor() as i64;
    let by = (semi_y + 1e-9).floor() as i64;
    let mut points = Vec::new();
    for mx in -bx..=bx {
        let u = mx as f64 / semi_x;
        for my in -by..=by {
            let v = my as f64 / semi_y;
            if u * u + v * v <= 1.0 + ELLIPSE_SLACK {
                points.push((mx, my));
            }
        }
    }
    WavenumberLattice {
        points,
        semi_x,
        semi_y,
    }
}

/// Patch antenna gain `G = 4π τ S_a / λ²`, returned as `(G_S, G_R)`.
pub fn antenna_gain(geom: &ArrayGeometry) -> (f64, f64) {
    let g = 4.0 * PI * geom.efficiency * geom.antenna_area / (geom.wavelength * geom.wavelength);
    (g, g)
}

/// Noise parameter of the angular-domain model,
/// `ζ = σ² / (G_R G_S N_R N_S)`.
pub fn effective_zeta(geom: &ArrayGeometry, noise_power: f64) -> Result<f64> {
    if !(noise_power.is_finite() && noise_power > 0.0) {
        return Err(Error::Domain(format!(
            "noise power must be positive, got {noise_power}"
        )));
    }
    let (gs, gr) = antenna_gain(geom);
    let (ns, nr) = geom.antenna_counts();
    Ok(noise_power / (gr * gs * nr as f64 * ns as f64))
}

/// `σ² = 10^(−SNR/10)` for unit signal power.
pub fn noise_power_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}
