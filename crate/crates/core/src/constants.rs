//! Physical constants (CODATA 2018).
//!
//! `EPSILON_0` is derived from `MU_0` and `C_0` so that `MU_0 * EPSILON_0 * C_0^2 == 1`
//! holds to rounding, keeping the conformal-mapping identity exact in both forms.

/// Speed of light in vacuum [m/s].
pub const C_0: f64 = 299_792_458.0;

/// Vacuum permeability [H/m].
pub const MU_0: f64 = 1.256_637_062_12e-6;

/// Vacuum permittivity [F/m].
pub const EPSILON_0: f64 = 1.0 / (MU_0 * C_0 * C_0);

/// Reduced Planck constant [J s].
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant [J/K].
pub const K_B: f64 = 1.380_649e-23;
