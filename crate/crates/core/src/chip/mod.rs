//! Chip-level model: several quarter-wave resonators on one feedline.

mod monte_carlo;
mod mse;
mod optimize;
mod synth;

pub use monte_carlo::{run_monte_carlo, run_monte_carlo_with, McResult, RNG_ALGORITHM};
pub use mse::{linear_fit_mse, LinearFit};
pub use optimize::{optimize_geometry, GeometryCandidate, SearchGrid};
pub use synth::{synthesize_s21, SyntheticTrace};

use serde::{Deserialize, Serialize};

use crate::em::{CpwGeometry, Material};
use crate::error::positive;
use crate::kinetic::KineticMode;
use crate::resonator::ResonatorModel;
use crate::{Error, Result};

/// Resonators sharing a feedline with linearly spaced target frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChipDesign {
    pub n_resonators: usize,
    /// Mean design frequency [Hz].
    pub f_mean: f64,
    /// Frequency step between neighbouring resonators [Hz].
    pub f_gap: f64,
    /// Cross-section shared by every resonator; `length` is ignored.
    pub geom: CpwGeometry,
    pub mat: Material,
    pub q_c_nominal: f64,
}

impl ChipDesign {
    pub fn validate(&self) -> Result<()> {
        if self.n_resonators < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: self.n_resonators,
            });
        }
        positive("f_gap", self.f_gap)?;
        positive("q_c_nominal", self.q_c_nominal)?;
        self.geom.validate()?;
        self.mat.validate()?;
        let lowest = self.target_frequency(0);
        positive("lowest target frequency", lowest)?;
        Ok(())
    }

    /// `f_i = f_mean + (i − (n−1)/2) f_gap`.
    pub fn target_frequency(&self, i: usize) -> f64 {
        let offset = i as f64 - 0.5 * (self.n_resonators as f64 - 1.0);
        self.f_mean + offset * self.f_gap
    }

    pub fn target_frequencies(&self) -> Vec<f64> {
        (0..self.n_resonators)
            .map(|i| self.target_frequency(i))
            .collect()
    }

    /// One resonator per target, each with its length solved so that the
    /// prediction (under `mode`) hits the target at the nominal thickness.
    pub fn design(&self, mode: KineticMode) -> Result<Vec<ResonatorModel>> {
        self.validate()?;
        let geom = CpwGeometry {
            length: None,
            ..self.geom
        };
        self.target_frequencies()
            .into_iter()
            .map(|f| ResonatorModel::designed_for(f, geom, self.mat, mode))
            .collect()
    }
}

/// Film-thickness disorder across a chip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThicknessModel {
    /// Nominal thickness [m].
    pub d_nominal: f64,
    /// Standard deviation of independent Gaussian per-resonator deviations [m].
    pub sigma_d: f64,
    /// Linear drift per resonator index, centred on the middle of the chip [m].
    pub gradient_d: f64,
}

impl ThicknessModel {
    /// 2 % relative Gaussian disorder, no gradient.
    pub fn relative(d_nominal: f64, sigma_rel: f64) -> Self {
        ThicknessModel {
            d_nominal,
            sigma_d: sigma_rel * d_nominal,
            gradient_d: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("d_nominal", self.d_nominal)?;
        if !(self.sigma_d >= 0.0 && self.sigma_d.is_finite()) {
            return Err(Error::domain("sigma_d", self.sigma_d, "must be >= 0"));
        }
        if !self.gradient_d.is_finite() {
            return Err(Error::domain(
                "gradient_d",
                self.gradient_d,
                "must be finite",
            ));
        }
        Ok(())
    }

    /// Deterministic part of the thickness at resonator `i` of `n`.
    pub fn mean_thickness(&self, i: usize, n: usize) -> f64 {
        self.d_nominal + self.gradient_d * (i as f64 - 0.5 * (n as f64 - 1.0))
    }
}
