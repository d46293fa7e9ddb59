//! Competition of two species for one resource in two coupled environments.
//!
//! Two couplings of a pair of chemostats are modeled:
//!
//! * a **switched** chemostat, a piecewise deterministic Markov process that
//!   jumps between the two environments at rates `λ¹ = sλ` and `λ² = (1−s)λ`
//!   ([`pdmp`], [`invasion`]);
//! * a **gradostat**, two vessels exchanging content at those same rates
//!   ([`gradostat`]).
//!
//! For both, invasion rates decide the long-time outcome. The crate computes
//! them in closed form or by quadrature, estimates them by simulation, and
//! sweeps them over the `(s, λ)` plane ([`sweep`]).

pub mod config;
pub mod crosscheck;
pub mod datasets;
pub mod error;
pub mod gradostat;
pub mod invasion;
pub mod model;
pub mod ode;
pub mod pdmp;
pub mod quadrature;
pub mod rng;
pub mod roots;
pub mod stats;
pub mod sweep;
pub mod trajectory;

pub use error::{Error, Result};
pub use model::{BreakEven, DuoConfig, MonodParams, Species, VesselParams};
