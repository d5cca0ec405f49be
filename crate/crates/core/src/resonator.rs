//! Quarter-wave resonator frequency model.

use serde::{Deserialize, Serialize};

use crate::em::{CpwGeometry, Material, TransmissionLineParams};
use crate::error::positive;
use crate::kinetic::{transmission_line, KineticMode};
use crate::Result;

/// Relative step on `d` for the central-difference thickness sensitivity.
pub const SENSITIVITY_STEP: f64 = 1e-4;

/// `f = 1 / (4 l √(C L))`.
pub fn quarter_wave_frequency(length: f64, c_per_len: f64, l_per_len: f64) -> Result<f64> {
    positive("length", length)?;
    positive("capacitance per length", c_per_len)?;
    positive("inductance per length", l_per_len)?;
    Ok(1.0 / (4.0 * length * (c_per_len * l_per_len).sqrt()))
}

/// Length that puts the quarter-wave resonance at `f_target`.
pub fn solve_length(f_target: f64, c_per_len: f64, l_per_len: f64) -> Result<f64> {
    positive("target frequency", f_target)?;
    positive("capacitance per length", c_per_len)?;
    positive("inductance per length", l_per_len)?;
    Ok(1.0 / (4.0 * f_target * (c_per_len * l_per_len).sqrt()))
}

/// A single quarter-wave resonator: geometry (with length), material and the
/// frequencies predicted with and without the kinetic term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorModel {
    pub geom: CpwGeometry,
    pub mat: Material,
    pub mode: KineticMode,
    pub tl: TransmissionLineParams,
    /// Frequency with `L_k = 0` [Hz].
    pub f_geometric: f64,
    /// Frequency with the kinetic term as selected by `mode` [Hz].
    pub f_full: f64,
}

impl ResonatorModel {
    pub fn new(geom: CpwGeometry, mat: Material) -> Result<Self> {
        Self::with_mode(geom, mat, KineticMode::Full)
    }

    pub fn with_mode(geom: CpwGeometry, mat: Material, mode: KineticMode) -> Result<Self> {
        let length = geom.require_length()?;
        let tl = transmission_line(&geom, &mat, mode)?;
        Ok(ResonatorModel {
            geom,
            mat,
            mode,
            tl,
            f_geometric: quarter_wave_frequency(length, tl.c_per_len, tl.lm_per_len)?,
            f_full: quarter_wave_frequency(length, tl.c_per_len, tl.total_inductance())?,
        })
    }

    /// Resonator whose length is chosen so that `f_full == f_target` at the
    /// geometry's thickness.
    pub fn designed_for(
        f_target: f64,
        geom: CpwGeometry,
        mat: Material,
        mode: KineticMode,
    ) -> Result<Self> {
        let tl = transmission_line(&geom, &mat, mode)?;
        let length = solve_length(f_target, tl.c_per_len, tl.total_inductance())?;
        Self::with_mode(geom.with_length(length)?, mat, mode)
    }

    /// Same resonator (same length) on a film of thickness `d`.
    pub fn at_thickness(&self, d: f64) -> Result<Self> {
        Self::with_mode(self.geom.with_thickness(d), self.mat, self.mode)
    }

    pub fn length(&self) -> f64 {
        self.geom.length.unwrap_or(f64::NAN)
    }
}

/// `Δf = f_full − f_geometric`; negative whenever `L_k > 0`.
pub fn frequency_shift(model: &ResonatorModel) -> f64 {
    model.f_full - model.f_geometric
}

/// `∂f/∂d` [Hz/m] by central differences with relative step [`SENSITIVITY_STEP`].
pub fn thickness_sensitivity(model: &ResonatorModel) -> Result<f64> {
    let d = model.geom.d;
    let h = SENSITIVITY_STEP * d;
    let up = model.at_thickness(d + h)?.f_full;
    let down = model.at_thickness(d - h)?.f_full;
    Ok((up - down) / (2.0 * h))
}
