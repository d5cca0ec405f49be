//! Design and measurement-analysis toolkit for superconducting coplanar
//! waveguide resonators.
//!
//! The crate is layered bottom-up:
//!
//! * [`em`]: complete elliptic integrals and the zero-thickness conformal
//!   mapping for per-unit-length capacitance and geometric inductance.
//! * [`kinetic`]: thickness-dependent penetration depth and the thin-film
//!   kinetic inductance of the centre strip and ground planes.
//! * [`resonator`]: quarter-wave frequency prediction, length solving and
//!   thickness sensitivity.
//! * [`chip`]: multiplexed chips: linear-fit MSE, Monte-Carlo thickness
//!   disorder, footprint-constrained geometry search and synthetic S21.
//! * [`fit`]: Levenberg-Marquardt engine, notch-resonance fitting, photon
//!   number calibration and TLS power-dependence fits.
//! * [`io`]: configuration, trace CSV, reports and the mode runner used by
//!   the `scpw` binary.
//!
//! All lengths, frequencies and powers are SI inside the library; unit
//! conversion happens only at the configuration boundary.

pub mod chip;
pub mod constants;
pub mod em;
mod error;
pub mod fit;
pub mod io;
pub mod kinetic;
pub mod parallel;
pub mod resonator;

pub use error::{Error, Result};

pub use em::{CpwGeometry, Material, TransmissionLineParams};
