use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::positive;
use crate::{Error, Result};

/// Parameters of a single notch-type (hanger) resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NotchParams {
    pub f0: f64,
    pub qi: f64,
    /// Magnitude of the complex coupling quality factor `Q̂c = Qc e^{−iφ}`.
    pub qc: f64,
    /// Impedance-mismatch (diameter-correction) angle [rad].
    pub phi: f64,
}

impl NotchParams {
    pub fn validate(&self) -> Result<()> {
        positive("f0", self.f0)?;
        positive("Qi", self.qi)?;
        positive("Qc", self.qc)?;
        if !(self.phi.abs() < std::f64::consts::FRAC_PI_2) {
            return Err(Error::domain("phi", self.phi, "must satisfy |phi| < pi/2"));
        }
        Ok(())
    }

    /// Loaded Q from `1/Q = 1/Qi + cos φ / Qc`.
    pub fn loaded_q(&self) -> f64 {
        1.0 / (1.0 / self.qi + self.phi.cos() / self.qc)
    }

    /// Full width at half depth, `f0 / Q`.
    pub fn linewidth(&self) -> f64 {
        self.f0 / self.loaded_q()
    }
}

/// `S21(f) = 1 − (Q / Q̂c) / (1 + 2iQ (f − f0)/f0)` with `Q̂c = Qc e^{−iφ}`.
pub fn notch_s21(f: f64, p: &NotchParams) -> Complex64 {
    notch_response(f, p.f0, p.loaded_q(), p.qc, p.phi)
}

pub(crate) fn notch_response(f: f64, f0: f64, q: f64, qc: f64, phi: f64) -> Complex64 {
    let coupling = Complex64::from_polar(q / qc, phi);
    let detuning = Complex64::new(1.0, 2.0 * q * (f - f0) / f0);
    Complex64::new(1.0, 0.0) - coupling / detuning
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn on_resonance_depth() {
        let p = NotchParams {
            f0: 6.636e9,
            qi: 2.5e6,
            qc: 7e5,
            phi: 0.0,
        };
        let s = notch_s21(p.f0, &p);
        assert!((s.norm() - (1.0 - p.loaded_q() / p.qc)).abs() < 1e-15);
    }

    #[test]
    fn far_detuned_is_unity() {
        let p = NotchParams {
            f0: 6e9,
            qi: 1e6,
            qc: 1e6,
            phi: 0.2,
        };
        assert!((notch_s21(7e9, &p) - 1.0).norm() < 1e-5);
    }

    #[test]
    fn half_depth_at_linewidth() {
        let p = NotchParams {
            f0: 5e9,
            qi: 1e5,
            qc: 3e5,
            phi: 0.3,
        };
        let peak = (1.0 - notch_s21(p.f0, &p)).norm();
        let edge = (1.0 - notch_s21(p.f0 + 0.5 * p.linewidth(), &p)).norm();
        assert!((edge * edge / (peak * peak) - 0.5).abs() < 1e-9);
    }
}
