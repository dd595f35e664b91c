use std::path::{Path, PathBuf};

use gcn_core::noise::{Geometry, NoiseTopology, OhmicBath};
use gcn_core::rates::{ArchitectureKind, NoiseKind};
use gcn_core::register::{CoherencePair, GateDrive, RegisterLabel};
use serde::{Deserialize, Serialize};

use crate::units::Units;
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// Parameters of every subcommand; each command reads the subset it needs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub architecture: Option<ArchitectureKind>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub len: Option<usize>,
    #[serde(rename = "L_values", default, skip_serializing_if = "Option::is_none")]
    pub len_values: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bath: Option<BathConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<NoiseTopology>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<PairSelection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<PairConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<Units>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Geometry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub left: RegisterLabel,
    pub right: RegisterLabel,
}

impl PairConfig {
    pub fn to_pair(&self) -> Result<CoherencePair, CliError> {
        Ok(CoherencePair::new(self.left.clone(), self.right.clone())?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKeyword {
    All,
    WorstCase,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PairSelection {
    Keyword(PairKeyword),
    Explicit(Vec<PairConfig>),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_trajectories: Option<usize>,
    /// In units of the inverse reference rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    /// Simulate the full quadratic bus Hamiltonian instead of the linear pointer model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_bus: Option<bool>,
}

pub const DEFAULT_TRAJECTORIES: usize = 40_000;

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(format!("invalid config: {e}")))
    }

    pub fn architecture(&self) -> Result<ArchitectureKind, CliError> {
        self.architecture.ok_or(CliError::Missing("architecture"))
    }

    pub fn register_len(&self) -> Result<usize, CliError> {
        self.len.ok_or(CliError::Missing("L"))
    }

    pub fn bath_config(&self) -> Result<&BathConfig, CliError> {
        self.bath.as_ref().ok_or(CliError::Missing("bath"))
    }

    /// Bath in natural units. `default_temperature` is used when the field is
    /// absent; `None` makes it required.
    pub fn bath(&self, default_temperature: Option<f64>) -> Result<OhmicBath, CliError> {
        let b = self.bath_config()?;
        let coupling = b.coupling.ok_or(CliError::Missing("bath.coupling"))?;
        let omega_c = b.omega_c.ok_or(CliError::Missing("bath.omega_c"))?;
        let temperature = b
            .temperature
            .or(default_temperature)
            .ok_or(CliError::Missing("bath.temperature"))?;
        let units = self.units.clone().unwrap_or_default();
        units.check()?;
        Ok(OhmicBath::new(
            coupling,
            units.frequency(omega_c),
            units.temperature(temperature),
            b.geometry.unwrap_or(Geometry::OneD),
            b.velocity.unwrap_or(1.0),
        )?)
    }

    pub fn drive(&self) -> Result<Option<GateDrive>, CliError> {
        self.drive.clone().map(GateDrive::new).transpose().map_err(Into::into)
    }

    pub fn noise_for(&self, kind: ArchitectureKind) -> NoiseKind {
        self.noise.unwrap_or(match kind {
            ArchitectureKind::FsaIndependent => NoiseKind::Independent,
            _ => NoiseKind::Central,
        })
    }

    pub fn mc(&self) -> McSettings {
        self.mc.clone().unwrap_or_default()
    }

    /// Sites from explicit positions, or a chain of `L` sites at `spacing`.
    pub fn positions(&self) -> Result<Vec<f64>, CliError> {
        if let Some(p) = &self.positions {
            return Ok(p.clone());
        }
        let spacing = self.spacing.ok_or(CliError::Missing("positions"))?;
        Ok((0..self.register_len()?).map(|j| j as f64 * spacing).collect())
    }
}
