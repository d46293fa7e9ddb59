use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{hypothesis_hw, DuoConfig, HwCheck, Species, HW_GRID_DEFAULT};

use super::{lambda0, lambda_two_species};

pub const ZERO_BAND_DEFAULT: f64 = 1e-4;

/// Long-time outcome of the switched chemostat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwitchCase {
    ExtinctionOfU,
    ExtinctionOfV,
    ExclusiveBistability,
    Coexistence,
    /// Neither species can persist even alone.
    Washout,
    Inconclusive,
}

impl SwitchCase {
    pub fn tag(self) -> &'static str {
        match self {
            SwitchCase::ExtinctionOfU => "extinction-of-u",
            SwitchCase::ExtinctionOfV => "extinction-of-v",
            SwitchCase::ExclusiveBistability => "exclusive-bistability",
            SwitchCase::Coexistence => "coexistence",
            SwitchCase::Washout => "washout",
            SwitchCase::Inconclusive => "inconclusive",
        }
    }

    pub fn extinction_of(w: Species) -> Self {
        match w {
            Species::U => SwitchCase::ExtinctionOfU,
            Species::V => SwitchCase::ExtinctionOfV,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchVerdict {
    pub case: SwitchCase,
    /// Face rates `Λ⁰_u`, `Λ⁰_v` (each species alone).
    pub lambda0: [f64; 2],
    /// Two-species rates `Λ_u`, `Λ_v`, when both species persist alone.
    pub rates: Option<[f64; 2]>,
    /// `(H_w)` for the species with the negative rate, when the sign table needs it.
    pub hw: Option<(Species, HwCheck)>,
}

/// Sign table for the switched model.
///
/// A species whose face rate `Λ⁰_w` is negative dies out on its own. When
/// both persist alone, the two-species rates decide: `(+,+)` coexistence,
/// `(−,−)` exclusive bistability, mixed signs extinction of the negative
/// species provided `(H_w)` holds for it. Rates within `zero_band` of zero,
/// or a failing `(H_w)`, give `inconclusive`.
pub fn classify_switching(c: &DuoConfig, zero_band: f64) -> Result<SwitchVerdict> {
    c.validate()?;
    c.common_input()?;
    let l0 = [lambda0(c, Species::U)?, lambda0(c, Species::V)?];
    let mut verdict = SwitchVerdict {
        case: SwitchCase::Inconclusive,
        lambda0: l0,
        rates: None,
        hw: None,
    };
    if l0.iter().any(|x| x.abs() < zero_band) {
        return Ok(verdict);
    }
    verdict.case = match (l0[0] > 0.0, l0[1] > 0.0) {
        (false, false) => SwitchCase::Washout,
        (true, false) => SwitchCase::ExtinctionOfV,
        (false, true) => SwitchCase::ExtinctionOfU,
        (true, true) => {
            let rates = [lambda_two_species(c, Species::U)?, lambda_two_species(c, Species::V)?];
            verdict.rates = Some(rates);
            if rates.iter().any(|x| x.abs() < zero_band) {
                SwitchCase::Inconclusive
            } else {
                match (rates[0] > 0.0, rates[1] > 0.0) {
                    (true, true) => SwitchCase::Coexistence,
                    (false, false) => SwitchCase::ExclusiveBistability,
                    (up, _) => {
                        let loser = if up { Species::V } else { Species::U };
                        let hw = hypothesis_hw(c, loser, HW_GRID_DEFAULT)?;
                        verdict.hw = Some((loser, hw));
                        if hw.holds {
                            SwitchCase::extinction_of(loser)
                        } else {
                            SwitchCase::Inconclusive
                        }
                    }
                }
            }
        }
    };
    Ok(verdict)
}
