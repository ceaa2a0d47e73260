//! Rectangular rearrangement of gridded fields on `Ω × [0,1]`.
//!
//! Each component is replaced by the one-dimensional monotone profile in
//! `x_N` with the same distribution; for consistent boundary data neither the
//! Dirichlet nor the potential part of the energy may increase.

mod energy;
mod field;
mod hardy_littlewood;
mod rearrangement;
mod tilted;

pub use energy::{energy, energy_of_profile, verify_energy_decrease, EnergyBreakdown, EnergyDecreaseReport};
pub use field::{trapezoid_weights, BoxField, BOUNDARY_TOL};
pub use hardy_littlewood::{hl_inequality_check, hl_sums, HlReport};
pub use rearrangement::{
    boundary_consistency, equimeasurability_defect, rectangular_rearrangement, BoundaryConsistency, Rearrangement,
};
pub use tilted::{tilted_field, TiltParams};

#[cfg(test)]
mod tests;
