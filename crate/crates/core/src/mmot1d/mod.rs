//! Multi-marginal transport with one-dimensional marginals.
//!
//! For costs that become submodular after sign flips the monotone (quantile)
//! coupling is optimal; potentials and a product-grid duality certificate
//! confirm this independently of the construction.

mod certify;
mod coupling;
mod marginal;
mod oracle;
mod potentials;
mod pushforward;

pub use certify::{certify, max_feasibility_violation, range_axes, DualityCertificate};
pub use coupling::{coupling_cost, plan_cost, solve_monotone, MonotoneCoupling};
pub use marginal::{DiscreteMarginal, MERGE_TOL};
pub use oracle::{brute_force_oracle, permutations, OracleResult, MAX_ATOMS, MAX_MARGINALS};
pub use potentials::{build_potentials, build_potentials_with, default_resolution, DualPotentials, PotentialTable};
pub use pushforward::{
    field_marginals, pushforward_coupling, support_distance, verify_pushforward_optimality, PushforwardReport,
    SUPPORT_TOL,
};

/// `marginal_from_field`: sorted, merged, normalized nodal values.
pub fn marginal_from_field(values: &[f64], weights: Option<&[f64]>) -> crate::Result<DiscreteMarginal> {
    DiscreteMarginal::from_values(values, weights)
}
