//! Electromagnetic core: elliptic integrals and CPW conformal mapping.

mod cpw;
mod elliptic;

pub use cpw::{
    cpw_capacitance, cpw_geometric_inductance, effective_permittivity, CpwGeometry, Material,
    TransmissionLineParams,
};
pub use elliptic::{complementary_modulus, elliptic_k};
