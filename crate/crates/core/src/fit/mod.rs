//! Measurement analysis: nonlinear least squares, notch-resonance fitting,
//! photon-number calibration and TLS power-dependence fits.

pub mod nlls;
mod notch;
mod power;
mod preprocess;
mod resonance;
mod tls;
mod trace;

pub use notch::{notch_s21, NotchParams};
pub use power::{
    photon_number, photon_number_scaled, power_at_chip, AttenuationChain, AttenuationStage,
};
pub use preprocess::{preprocess_trace, Baseline, PreprocessOptions, Preprocessed};
pub use resonance::{
    fit_resonance, fit_resonances, FitOptions, ResonanceFit, ResonanceUncertainties,
};
pub use tls::{fit_tls, thermal_factor, tls_internal_q, TlsFit, TlsPoint, TlsUncertainties};
pub use trace::S21Trace;
