use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::error::positive;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttenuationStage {
    pub label: String,
    pub attenuation_db: f64,
}

/// Input line between the source and the chip.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AttenuationChain {
    pub stages: Vec<AttenuationStage>,
    pub cable_loss_db: f64,
}

impl AttenuationChain {
    pub fn validate(&self) -> Result<()> {
        for s in &self.stages {
            if !(s.attenuation_db >= 0.0 && s.attenuation_db.is_finite()) {
                return Err(Error::domain(
                    "stage attenuation",
                    s.attenuation_db,
                    "must be >= 0 dB",
                ));
            }
        }
        if !(self.cable_loss_db >= 0.0 && self.cable_loss_db.is_finite()) {
            return Err(Error::domain(
                "cable loss",
                self.cable_loss_db,
                "must be >= 0 dB",
            ));
        }
        Ok(())
    }

    pub fn total_db(&self) -> f64 {
        self.stages.iter().map(|s| s.attenuation_db).sum::<f64>() + self.cable_loss_db
    }
}

/// Power arriving at the chip [dBm].
pub fn power_at_chip(p_source_dbm: f64, chain: &AttenuationChain) -> f64 {
    p_source_dbm - chain.total_db()
}

/// Mean intracavity photon number of a notch resonator,
/// `⟨n⟩ = 2 Q² P / (Qc ħ ω₀²)`.
pub fn photon_number(p_chip_dbm: f64, f0: f64, q: f64, qc: f64) -> Result<f64> {
    photon_number_scaled(p_chip_dbm, f0, q, qc, 1.0)
}

/// [`photon_number`] times a dimensionless impedance-ratio correction.
pub fn photon_number_scaled(
    p_chip_dbm: f64,
    f0: f64,
    q: f64,
    qc: f64,
    impedance_factor: f64,
) -> Result<f64> {
    positive("f0", f0)?;
    positive("Q", q)?;
    positive("Qc", qc)?;
    positive("impedance factor", impedance_factor)?;
    if !p_chip_dbm.is_finite() {
        return Err(Error::domain("power", p_chip_dbm, "must be finite"));
    }
    let watts = 1e-3 * 10f64.powf(p_chip_dbm / 10.0);
    let omega = 2.0 * std::f64::consts::PI * f0;
    Ok(impedance_factor * 2.0 * q * q * watts / (qc * HBAR * omega * omega))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> AttenuationChain {
        let stage = |label: &str, db| AttenuationStage {
            label: label.into(),
            attenuation_db: db,
        };
        AttenuationChain {
            stages: vec![
                stage("3K", 20.0),
                stage("still", 3.0),
                stage("cold plate", 6.0),
                stage("MXC", 40.0),
            ],
            cable_loss_db: 10.0,
        }
    }

    #[test]
    fn fridge_chain() {
        assert_eq!(power_at_chip(-60.0, &chain()), -139.0);
        let mut rev = chain();
        rev.stages.reverse();
        assert_eq!(power_at_chip(-60.0, &rev), -139.0);
        assert_eq!(power_at_chip(-60.0, &AttenuationChain::default()), -60.0);
    }

    #[test]
    fn linear_in_power() {
        let a = photon_number(-140.0, 6.636e9, 5.47e5, 7e5).unwrap();
        let half = photon_number(-140.0 - 10.0 * 2f64.log10(), 6.636e9, 5.47e5, 7e5).unwrap();
        assert!((a / half - 2.0).abs() < 1e-12);
        let doubled = photon_number(-140.0 + 3.0103, 6.636e9, 5.47e5, 7e5).unwrap();
        assert!((doubled / a - 2.0).abs() < 1e-4);
    }

    #[test]
    fn inverse_square_in_frequency() {
        let a = photon_number(-140.0, 5e9, 5e5, 7e5).unwrap();
        let b = photon_number(-140.0, 10e9, 5e5, 7e5).unwrap();
        assert!((a / b - 4.0).abs() < 1e-12);
    }

    #[test]
    fn single_photon_power() {
        let (qi, qc, f0): (f64, f64, f64) = (2.5e6, 0.7e6, 6.636e9);
        let q = 1.0 / (1.0 / qi + 1.0 / qc);
        assert!((q - 5.469e5).abs() < 1e2);
        let omega = 2.0 * std::f64::consts::PI * f0;
        let watts = HBAR * omega * omega * qc / (2.0 * q * q);
        let dbm = 10.0 * (watts / 1e-3).log10();
        assert!((photon_number(dbm, f0, q, qc).unwrap() - 1.0).abs() < 1e-12);
        // deep below the -139 dBm reached with a -60 dBm source
        assert!(dbm < -130.0, "{dbm}");
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(photon_number(-100.0, 0.0, 1.0, 1.0).is_err());
        assert!(photon_number(-100.0, 1e9, -1.0, 1.0).is_err());
        let mut c = chain();
        c.cable_loss_db = -1.0;
        assert!(c.validate().is_err());
    }
}
