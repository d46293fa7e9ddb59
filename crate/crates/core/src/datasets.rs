//! Reference parameter sets used to build the sign-map figures.
//!
//! Every constructor takes the coupling `(s, λ)` so the same vessels can be
//! evaluated anywhere on a sweep grid. For the one-species sets `Π₁`/`Π₂` the
//! second species is a copy of the first; only `u` is meaningful there.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{DuoConfig, MonodParams, VesselParams};

fn vessel(delta: f64, r0: f64, u: (f64, f64), v: (f64, f64)) -> VesselParams {
    VesselParams {
        delta,
        r0,
        monod_u: MonodParams { a: u.0, b: u.1 },
        monod_v: MonodParams { a: v.0, b: v.1 },
    }
}

fn duo(v1: VesselParams, v2: VesselParams, s: f64, lambda: f64) -> DuoConfig {
    DuoConfig {
        vessel1: v1,
        vessel2: v2,
        s,
        lambda,
    }
}

/// `Π₁`: a = (1.1, 2), b = (0.4, 4), δ = (1, 1), R₀ = (10, 1).
pub fn pi1(s: f64, lambda: f64) -> DuoConfig {
    duo(
        vessel(1.0, 10.0, (1.1, 0.4), (1.1, 0.4)),
        vessel(1.0, 1.0, (2.0, 4.0), (2.0, 4.0)),
        s,
        lambda,
    )
}

/// `Π₂`: a = (1.1, 2), b = (0.05, 2), δ = (1, 1), R₀ = (0.55, 2.1).
pub fn pi2(s: f64, lambda: f64) -> DuoConfig {
    duo(
        vessel(1.0, 0.55, (1.1, 0.05), (1.1, 0.05)),
        vessel(1.0, 2.1, (2.0, 2.0), (2.0, 2.0)),
        s,
        lambda,
    )
}

/// Each species is the better competitor in one vessel; averaging can give
/// coexistence.
pub fn fig3a(s: f64, lambda: f64) -> DuoConfig {
    duo(
        vessel(1.9, 8.0, (4.2, 5.0), (2.1, 0.5)),
        vessel(1.5, 8.0, (4.0, 5.0), (2.0, 0.5)),
        s,
        lambda,
    )
}

/// Like [`fig3a`] with the species' roles reversed between the vessels.
pub fn fig3b(s: f64, lambda: f64) -> DuoConfig {
    duo(
        vessel(1.7, 8.0, (4.2, 5.0), (2.1, 0.5)),
        vessel(1.5, 8.0, (2.0, 0.5), (4.0, 5.0)),
        s,
        lambda,
    )
}

/// Both vessels favor `u`, yet `u` can be driven out.
pub fn fig4a(s: f64, lambda: f64) -> DuoConfig {
    duo(
        vessel(1.0, 7.0, (3.5, 8.75), (1.25, 1.125)),
        vessel(2.0, 7.0, (2.5, 0.125), (7.0, 3.75)),
        s,
        lambda,
    )
}

/// The set with an odd-bistable region in the gradostat.
pub fn fig4b(s: f64, lambda: f64) -> DuoConfig {
    duo(
        vessel(2.5, 20.0, (3.7, 1.55), (4.4, 3.6)),
        vessel(1.1, 20.0, (3.6, 3.55), (2.5, 0.4)),
        s,
        lambda,
    )
}

/// Named figure reproductions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Figure {
    #[serde(rename = "fig2-a")]
    Fig2a,
    #[serde(rename = "fig2-b")]
    Fig2b,
    #[serde(rename = "fig3-a")]
    Fig3a,
    #[serde(rename = "fig3-b")]
    Fig3b,
    #[serde(rename = "fig4-a")]
    Fig4a,
    #[serde(rename = "fig4-b")]
    Fig4b,
}

impl Figure {
    pub const ALL: [Figure; 6] = [
        Figure::Fig2a,
        Figure::Fig2b,
        Figure::Fig3a,
        Figure::Fig3b,
        Figure::Fig4a,
        Figure::Fig4b,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2a => "fig2-a",
            Figure::Fig2b => "fig2-b",
            Figure::Fig3a => "fig3-a",
            Figure::Fig3b => "fig3-b",
            Figure::Fig4a => "fig4-a",
            Figure::Fig4b => "fig4-b",
        }
    }

    /// Parameter set at the given coupling.
    pub fn config(self, s: f64, lambda: f64) -> DuoConfig {
        match self {
            Figure::Fig2a => pi1(s, lambda),
            Figure::Fig2b => pi2(s, lambda),
            Figure::Fig3a => fig3a(s, lambda),
            Figure::Fig3b => fig3b(s, lambda),
            Figure::Fig4a => fig4a(s, lambda),
            Figure::Fig4b => fig4b(s, lambda),
        }
    }

    /// Fig. 2 compares one-species rates; the others compare two-species rates.
    pub fn one_species(self) -> bool {
        matches!(self, Figure::Fig2a | Figure::Fig2b)
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let key = s.trim().to_ascii_lowercase();
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == key || f.name().replace('-', "") == key)
            .ok_or_else(|| Error::UnknownFigure(s.to_string()))
    }
}
