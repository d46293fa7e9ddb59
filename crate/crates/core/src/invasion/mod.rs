//! Invasion rates of the switched chemostat, in closed form or by quadrature.

mod classify;
mod one_species;
mod two_species;

pub use classify::{classify_switching, SwitchCase, SwitchVerdict, ZERO_BAND_DEFAULT};
pub use one_species::{
    invariant_density, is_monotone, lambda0, lambda0_limits, lambda0_monotone_check, lambda0_profile,
    lambda0_with_nodes, BetaSpec, FaceDensity, MONOTONE_TOL,
};
pub use two_species::{
    averaged_resident_root, lambda_two_species, lambda_two_species_limits, Endpoint, Support,
    TwoSpeciesIntegrand,
};
