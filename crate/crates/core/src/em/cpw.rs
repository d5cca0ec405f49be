use serde::{Deserialize, Serialize};

use super::elliptic::{complementary_modulus, elliptic_k};
use crate::constants::{EPSILON_0, MU_0};
use crate::error::positive;
use crate::{Error, Result};

/// Cross-section of a coplanar waveguide, plus an optional line length.
///
/// All dimensions in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpwGeometry {
    /// Centre-conductor width.
    pub w: f64,
    /// Gap between centre conductor and ground.
    pub s: f64,
    /// Film thickness.
    pub d: f64,
    /// Resonator length, when the geometry describes a finite line.
    pub length: Option<f64>,
}

impl CpwGeometry {
    pub fn new(w: f64, s: f64, d: f64) -> Result<Self> {
        let geom = CpwGeometry {
            w,
            s,
            d,
            length: None,
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn with_length(mut self, length: f64) -> Result<Self> {
        self.length = Some(positive("length", length)?);
        Ok(self)
    }

    pub fn with_thickness(mut self, d: f64) -> Self {
        self.d = d;
        self
    }

    pub fn validate(&self) -> Result<()> {
        positive("w", self.w)?;
        positive("s", self.s)?;
        positive("d", self.d)?;
        if let Some(l) = self.length {
            positive("length", l)?;
        }
        Ok(())
    }

    /// Footprint of the line, `w + 2s`.
    pub fn footprint(&self) -> f64 {
        self.w + 2.0 * self.s
    }

    /// Conformal-mapping modulus `k = w / (w + 2s)`.
    pub fn modulus(&self) -> f64 {
        self.w / self.footprint()
    }

    pub fn require_length(&self) -> Result<f64> {
        match self.length {
            Some(l) => positive("length", l),
            None => Err(Error::domain("length", f64::NAN, "geometry has no length")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    /// Bulk penetration depth λ₀ [m].
    pub lambda0: f64,
    /// Substrate relative permittivity.
    pub eps_r: f64,
    /// Temperature [K].
    pub temperature: f64,
}

impl Material {
    pub fn new(lambda0: f64, eps_r: f64, temperature: f64) -> Result<Self> {
        let mat = Material {
            lambda0,
            eps_r,
            temperature,
        };
        mat.validate()?;
        Ok(mat)
    }

    pub fn validate(&self) -> Result<()> {
        positive("lambda0", self.lambda0)?;
        positive("temperature", self.temperature)?;
        if !(self.eps_r >= 1.0 && self.eps_r.is_finite()) {
            return Err(Error::domain("eps_r", self.eps_r, "must be >= 1"));
        }
        Ok(())
    }
}

/// Per-unit-length line constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionLineParams {
    /// Capacitance [F/m].
    pub c_per_len: f64,
    /// Geometric (magnetic) inductance [H/m].
    pub lm_per_len: f64,
    /// Kinetic inductance [H/m]; zero when kinetic effects are switched off.
    pub lk_per_len: f64,
}

impl TransmissionLineParams {
    pub fn total_inductance(&self) -> f64 {
        self.lm_per_len + self.lk_per_len
    }

    /// `L_k / (L_m + L_k)`.
    pub fn kinetic_fraction(&self) -> f64 {
        self.lk_per_len / self.total_inductance()
    }

    pub fn phase_velocity(&self) -> f64 {
        1.0 / (self.c_per_len * self.total_inductance()).sqrt()
    }

    /// Phase velocity without the kinetic term.
    pub fn geometric_phase_velocity(&self) -> f64 {
        1.0 / (self.c_per_len * self.lm_per_len).sqrt()
    }
}

/// `(εr + 1) / 2`: infinite substrate below, vacuum above.
pub fn effective_permittivity(mat: &Material) -> f64 {
    0.5 * (mat.eps_r + 1.0)
}

/// `C = 2ε₀(εr + 1) K(k) / K(k')`, zero-thickness conformal mapping.
pub fn cpw_capacitance(geom: &CpwGeometry, mat: &Material) -> Result<f64> {
    geom.validate()?;
    mat.validate()?;
    let (kk, kkp) = k_pair(geom)?;
    Ok(2.0 * EPSILON_0 * (mat.eps_r + 1.0) * kk / kkp)
}

/// `L_m = (μ₀/4) K(k') / K(k)`.
pub fn cpw_geometric_inductance(geom: &CpwGeometry) -> Result<f64> {
    geom.validate()?;
    let (kk, kkp) = k_pair(geom)?;
    Ok(0.25 * MU_0 * kkp / kk)
}

fn k_pair(geom: &CpwGeometry) -> Result<(f64, f64)> {
    let k = geom.modulus();
    Ok((elliptic_k(k)?, elliptic_k(complementary_modulus(k))?))
}
