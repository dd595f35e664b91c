//! Conversion of laboratory units to the natural units of the core library.
//!
//! With `frequency = "ghz"` frequencies are read in GHz and become angular
//! frequencies in rad/ns, so times are in ns and rates in 1/ns. Temperatures
//! in kelvin become `k_B T / ħ` in rad/ns, which needs the GHz time base.

use serde::{Deserialize, Serialize};

use crate::CliError;

const BOLTZMANN: f64 = 1.380649e-23;
const HBAR: f64 = 1.054571817e-34;

/// `k_B / ħ` in rad/ns per kelvin.
pub fn kelvin_to_rad_per_ns() -> f64 {
    BOLTZMANN / HBAR * 1e-9
}

pub fn ghz_to_rad_per_ns() -> f64 {
    2.0 * std::f64::consts::PI
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemperatureUnit {
    #[default]
    Natural,
    Kelvin,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyUnit {
    #[default]
    Natural,
    Ghz,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    #[serde(default)]
    pub temperature: TemperatureUnit,
    #[serde(default)]
    pub frequency: FrequencyUnit,
}

impl Units {
    pub fn check(&self) -> Result<(), CliError> {
        if self.temperature == TemperatureUnit::Kelvin && self.frequency != FrequencyUnit::Ghz {
            return Err(CliError::Constraint(
                "units.temperature = kelvin requires units.frequency = ghz".into(),
            ));
        }
        Ok(())
    }

    pub fn frequency(&self, f: f64) -> f64 {
        match self.frequency {
            FrequencyUnit::Natural => f,
            FrequencyUnit::Ghz => f * ghz_to_rad_per_ns(),
        }
    }

    pub fn temperature(&self, t: f64) -> f64 {
        match self.temperature {
            TemperatureUnit::Natural => t,
            TemperatureUnit::Kelvin => t * kelvin_to_rad_per_ns(),
        }
    }

    /// Header lines describing the conversions in effect.
    pub fn describe(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        if self.frequency == FrequencyUnit::Ghz {
            out.push(("frequency_unit".into(), format!("GHz -> rad/ns x {}", ghz_to_rad_per_ns())));
            out.push(("time_unit".into(), "ns".into()));
        }
        if self.temperature == TemperatureUnit::Kelvin {
            out.push(("temperature_unit".into(), format!("K -> rad/ns x {}", kelvin_to_rad_per_ns())));
        }
        out
    }
}
