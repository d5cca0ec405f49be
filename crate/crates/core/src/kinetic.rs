//! Kinetic inductance of a thin-film superconducting CPW.
//!
//! The effective penetration depth `λ = λ₀ coth(d/λ₀)` is substituted into the
//! thin-film expression `L_k = μ₀ λ² g(s, w, d) / (d w)`. The approximation is
//! strictly a `d < 2λ` result; it is evaluated for every `d < w` and the
//! returned [`KineticParams::valid_thin_film`] flag records whether the
//! thin-film condition actually holds.

use serde::{Deserialize, Serialize};

use crate::constants::MU_0;
use crate::em::{
    cpw_capacitance, cpw_geometric_inductance, elliptic_k, CpwGeometry, Material,
    TransmissionLineParams,
};
use crate::error::positive;
use crate::{Error, Result};

/// Whether the kinetic term contributes to the line inductance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KineticMode {
    #[default]
    Full,
    /// `L_k = 0`; what a purely electromagnetic simulation would predict.
    GeometricOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KineticParams {
    pub lambda_eff: f64,
    pub g_factor: f64,
    pub lk_per_len: f64,
    pub kinetic_fraction: f64,
    /// `d < 2 λ_eff`.
    pub valid_thin_film: bool,
}

/// Effective penetration depth of a film of thickness `d`: `λ₀ coth(d/λ₀)`.
pub fn penetration_depth(d: f64, lambda0: f64) -> Result<f64> {
    positive("d", d)?;
    positive("lambda0", lambda0)?;
    Ok(lambda0 / (d / lambda0).tanh())
}

/// Thin-film geometric factor
///
/// ```text
/// g = [ −ln(d/4w) − k ln(d/(4(w+2s))) + 2(w+s)/(w+2s) · ln(s/(w+s)) ] / (2 k² K(k)²)
/// ```
///
/// with `k = w/(w+2s)`. Dimensionless and invariant under uniform scaling of
/// `(s, w, d)`. Requires `d < w`.
pub fn geometric_factor(geom: &CpwGeometry) -> Result<f64> {
    geom.validate()?;
    let CpwGeometry { w, s, d, .. } = *geom;
    if d >= w {
        return Err(Error::domain(
            "d",
            d,
            "film thickness must be smaller than w",
        ));
    }
    let total = geom.footprint();
    let k = geom.modulus();
    let kk = elliptic_k(k)?;
    let bracket = -(d / (4.0 * w)).ln() - k * (d / (4.0 * total)).ln()
        + 2.0 * (w + s) / total * (s / (w + s)).ln();
    if !(bracket > 0.0) {
        return Err(Error::domain(
            "geometric factor",
            bracket,
            "logarithmic bracket is non-positive for this (s, w, d)",
        ));
    }
    Ok(bracket / (2.0 * k * k * kk * kk))
}

/// Kinetic inductance per unit length [H/m].
pub fn kinetic_inductance(geom: &CpwGeometry, mat: &Material) -> Result<f64> {
    mat.validate()?;
    let g = geometric_factor(geom)?;
    let lambda = penetration_depth(geom.d, mat.lambda0)?;
    Ok(MU_0 * lambda * lambda / (geom.d * geom.w) * g)
}

/// `L_k / (L_m + L_k)`.
pub fn kinetic_fraction(geom: &CpwGeometry, mat: &Material) -> Result<f64> {
    transmission_line(geom, mat, KineticMode::Full).map(|tl| tl.kinetic_fraction())
}

pub fn kinetic_params(geom: &CpwGeometry, mat: &Material) -> Result<KineticParams> {
    let lambda_eff = penetration_depth(geom.d, mat.lambda0)?;
    let g_factor = geometric_factor(geom)?;
    let tl = transmission_line(geom, mat, KineticMode::Full)?;
    Ok(KineticParams {
        lambda_eff,
        g_factor,
        lk_per_len: tl.lk_per_len,
        kinetic_fraction: tl.kinetic_fraction(),
        valid_thin_film: geom.d < 2.0 * lambda_eff,
    })
}

/// Full per-unit-length line constants for a geometry and material.
pub fn transmission_line(
    geom: &CpwGeometry,
    mat: &Material,
    mode: KineticMode,
) -> Result<TransmissionLineParams> {
    let lk_per_len = match mode {
        KineticMode::Full => kinetic_inductance(geom, mat)?,
        KineticMode::GeometricOnly => 0.0,
    };
    Ok(TransmissionLineParams {
        c_per_len: cpw_capacitance(geom, mat)?,
        lm_per_len: cpw_geometric_inductance(geom)?,
        lk_per_len,
    })
}
