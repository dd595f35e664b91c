//! Ohmic reservoirs, their spatial correlations, and classical noise spectra.
//!
//! Natural units are used throughout (`ħ = k_B = 1`). The classical power
//! spectrum follows the two-sided convention
//! `S(ω) = ∫ dτ ⟨Ξ(τ) Ξ(0)⟩ e^{iωτ}`, for which a coupling `Ξ(t)·Q̂` dephases a
//! coherence at rate `S(0) (Q − Q′)² / 2`.

mod psd;
pub(crate) mod synthesis;

pub use psd::{estimate_psd, psd_table, write_psd_csv, PsdAverager, PsdEstimate, PsdEstimator, PsdRow};
pub use synthesis::{stream_rng, synthesize_trajectories, NoiseSynthesizer, TrajectoryBundle, MAX_DT_OMEGA_C};

use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, GcnError, Result};

/// Dimensionality of the reservoir field that carries noise between sites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Geometry {
    #[serde(rename = "1d")]
    OneD,
    #[serde(rename = "3d")]
    ThreeD,
}

impl Geometry {
    pub fn name(self) -> &'static str {
        match self {
            Geometry::OneD => "1d",
            Geometry::ThreeD => "3d",
        }
    }

    pub fn other(self) -> Self {
        match self {
            Geometry::OneD => Geometry::ThreeD,
            Geometry::ThreeD => Geometry::OneD,
        }
    }
}

/// Ohmic reservoir `J(ω) = coupling · ω · e^{−ω/ω_c}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OhmicBath {
    coupling: f64,
    cutoff: f64,
    temperature: f64,
    geometry: Geometry,
    velocity: f64,
}

impl OhmicBath {
    pub fn new(
        coupling: f64,
        cutoff: f64,
        temperature: f64,
        geometry: Geometry,
        velocity: f64,
    ) -> Result<Self> {
        require_positive("coupling", coupling)?;
        require_positive("omega_c", cutoff)?;
        require_non_negative("temperature", temperature)?;
        require_positive("velocity", velocity)?;
        Ok(Self {
            coupling,
            cutoff,
            temperature,
            geometry,
            velocity,
        })
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn velocity(&self) -> f64 {
        self.velocity
    }

    pub fn with_geometry(mut self, geometry: Geometry) -> Self {
        self.geometry = geometry;
        self
    }

    pub fn with_coupling(self, coupling: f64) -> Result<Self> {
        Self::new(coupling, self.cutoff, self.temperature, self.geometry, self.velocity)
    }

    pub fn with_temperature(self, temperature: f64) -> Result<Self> {
        Self::new(self.coupling, self.cutoff, temperature, self.geometry, self.velocity)
    }

    /// Dimensionless separation `ω_c r / v`.
    pub fn reduced_distance(&self, r: f64) -> f64 {
        self.cutoff * r / self.velocity
    }

    /// Zero-frequency classical spectrum `S(0) = 2 T · coupling`.
    pub fn zero_frequency_psd(&self) -> Result<f64> {
        classical_psd(self, 0.0)
    }

    pub(crate) fn require_temperature(&self) -> Result<()> {
        if self.temperature > 0.0 {
            Ok(())
        } else {
            Err(GcnError::InvalidParameter {
                name: "temperature",
                reason: "classical noise needs T > 0; use the quadrature routines for T = 0".into(),
            })
        }
    }
}

/// Where the noise on each source comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseTopology {
    /// One central source shared by every coupler.
    Uniform,
    /// Statistically independent sources.
    Independent,
    /// One source per site, correlated through the reservoir field.
    Spatial { positions: Vec<f64> },
}

impl NoiseTopology {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseTopology::Uniform => "uniform",
            NoiseTopology::Independent => "independent",
            NoiseTopology::Spatial { .. } => "spatial",
        }
    }

    /// Evenly spaced sites `z_j = j · spacing`.
    pub fn chain(len: usize, spacing: f64) -> Self {
        NoiseTopology::Spatial {
            positions: (0..len).map(|j| j as f64 * spacing).collect(),
        }
    }

    pub(crate) fn validate(&self, n_sources: usize) -> Result<()> {
        if n_sources == 0 {
            return Err(GcnError::InvalidParameter {
                name: "n_sources",
                reason: "at least one noise source is required".into(),
            });
        }
        if let NoiseTopology::Spatial { positions } = self {
            if positions.len() != n_sources {
                return Err(GcnError::LengthMismatch {
                    what: "positions",
                    got: positions.len(),
                    expected: n_sources,
                });
            }
            if let Some(bad) = positions.iter().find(|z| !z.is_finite()) {
                return Err(GcnError::InvalidParameter {
                    name: "positions",
                    reason: format!("non-finite coordinate {bad}"),
                });
            }
        }
        Ok(())
    }
}

fn require_frequency(omega: f64) -> Result<()> {
    if omega.is_finite() && omega >= 0.0 {
        Ok(())
    } else {
        Err(GcnError::InvalidParameter {
            name: "omega",
            reason: format!("frequency must be finite and >= 0, got {omega}"),
        })
    }
}

/// `J(ω) = coupling · ω · e^{−ω/ω_c}`.
pub fn spectral_density(bath: &OhmicBath, omega: f64) -> Result<f64> {
    require_frequency(omega)?;
    Ok(bath.coupling * omega * (-omega / bath.cutoff).exp())
}

/// Retardation factor between two sites: `cos x` (1D) or `sin x / x` (3D).
pub fn propagation_kernel(x: f64, geometry: Geometry) -> f64 {
    match geometry {
        Geometry::OneD => x.cos(),
        Geometry::ThreeD => sinc(x),
    }
}

pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        // Taylor series; exact to rounding for |x| < 1e-4.
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

/// `J_jk(ω) = f(ω r / v) · J(ω)`.
pub fn cross_spectral_density(bath: &OhmicBath, omega: f64, r: f64) -> Result<f64> {
    require_non_negative("r", r)?;
    let j = spectral_density(bath, omega)?;
    Ok(propagation_kernel(omega * r / bath.velocity, bath.geometry) * j)
}

/// High-temperature classical spectrum `S(ω) = 2 T J(ω) / ω`, continuous at
/// `ω = 0` where it equals `2 T · coupling`.
pub fn classical_psd(bath: &OhmicBath, omega: f64) -> Result<f64> {
    require_frequency(omega)?;
    bath.require_temperature()?;
    Ok(2.0 * bath.temperature * bath.coupling * (-omega / bath.cutoff).exp())
}

/// Classical cross spectrum between sites at distance `r`.
pub fn classical_cross_psd(bath: &OhmicBath, omega: f64, r: f64) -> Result<f64> {
    require_non_negative("r", r)?;
    let s = classical_psd(bath, omega)?;
    Ok(propagation_kernel(omega * r / bath.velocity, bath.geometry) * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn bath(geometry: Geometry) -> OhmicBath {
        OhmicBath::new(1.0, 1.0, 1.0, geometry, 1.0).unwrap()
    }

    #[test]
    fn bath_validation() {
        assert!(OhmicBath::new(0.0, 1.0, 1.0, Geometry::OneD, 1.0).is_err());
        assert!(OhmicBath::new(1.0, -1.0, 1.0, Geometry::OneD, 1.0).is_err());
        assert!(OhmicBath::new(1.0, 1.0, -0.1, Geometry::OneD, 1.0).is_err());
        assert!(OhmicBath::new(1.0, 1.0, 0.0, Geometry::OneD, 1.0).is_ok());
        assert!(OhmicBath::new(1.0, 1.0, 1.0, Geometry::OneD, 0.0).is_err());
    }

    #[test]
    fn spectral_density_examples() {
        let b = bath(Geometry::OneD);
        assert!((spectral_density(&b, 1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(spectral_density(&b, 0.0).unwrap(), 0.0);
        assert!(spectral_density(&b, 800.0).unwrap() < 1e-300);
        assert!(spectral_density(&b, 3.0).unwrap() > spectral_density(&b, 4.0).unwrap());
        assert!(spectral_density(&b, -1.0).is_err());
    }

    #[test]
    fn kernel_examples() {
        assert!((propagation_kernel(PI, Geometry::OneD) + 1.0).abs() < 1e-15);
        assert_eq!(propagation_kernel(0.0, Geometry::ThreeD), 1.0);
        assert!(propagation_kernel(PI, Geometry::ThreeD).abs() < 1e-15);
        assert_eq!(propagation_kernel(0.0, Geometry::OneD), 1.0);
    }

    #[test]
    fn cross_spectrum_examples() {
        for g in [Geometry::OneD, Geometry::ThreeD] {
            let b = bath(g);
            for w in [0.0, 0.3, 1.0, 7.5] {
                assert_eq!(
                    cross_spectral_density(&b, w, 0.0).unwrap(),
                    spectral_density(&b, w).unwrap()
                );
            }
            assert_eq!(cross_spectral_density(&b, 0.0, 3.0).unwrap(), 0.0);
            assert!(cross_spectral_density(&b, 1.0, -1.0).is_err());
        }
        let b = bath(Geometry::OneD);
        assert!(cross_spectral_density(&b, PI / 2.0, 1.0).unwrap().abs() < 1e-16);
    }

    #[test]
    fn classical_psd_examples() {
        let b = bath(Geometry::OneD);
        assert_eq!(classical_psd(&b, 0.0).unwrap(), 2.0);
        assert!((classical_psd(&b, 1e-9).unwrap() - 2.0).abs() < 1e-8);
        let hot = OhmicBath::new(0.5, 2.0, 3.0, Geometry::ThreeD, 1.0).unwrap();
        let expected = 2.0 * 3.0 * 0.5 * (-1.0f64).exp();
        assert!((classical_psd(&hot, 2.0).unwrap() - expected).abs() < 1e-15);
        let cold = b.with_temperature(0.0).unwrap();
        assert!(classical_psd(&cold, 1.0).is_err());
    }

    #[test]
    fn classical_psd_matches_fluctuation_dissipation_ratio() {
        let b = OhmicBath::new(0.7, 3.0, 2.0, Geometry::OneD, 1.0).unwrap();
        for w in [0.1, 1.0, 5.0] {
            let ratio = 2.0 * b.temperature() * spectral_density(&b, w).unwrap() / w;
            assert!((classical_psd(&b, w).unwrap() - ratio).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn spatial_covariance_is_psd(
            positions in prop::collection::vec(-5.0f64..5.0, 2..8),
            omega in 0.0f64..20.0,
            three_d in prop::bool::ANY,
        ) {
            let g = if three_d { Geometry::ThreeD } else { Geometry::OneD };
            let n = positions.len();
            let m = DMatrix::from_fn(n, n, |j, k| {
                propagation_kernel(omega * (positions[j] - positions[k]).abs(), g)
            });
            prop_assert!((m.clone() - m.transpose()).abs().max() == 0.0);
            let eig = SymmetricEigen::new(m).eigenvalues;
            let max = eig.iter().cloned().fold(0.0, f64::max);
            prop_assert!(eig.iter().all(|&l| l >= -1e-10 * max.max(1.0)));
        }

        #[test]
        fn kernel_bounded(x in 0.0f64..1e3) {
            prop_assert!(propagation_kernel(x, Geometry::OneD).abs() <= 1.0);
            prop_assert!(propagation_kernel(x, Geometry::ThreeD).abs() <= 1.0);
        }

        #[test]
        fn low_frequency_limit_is_site_independent(r in 0.0f64..100.0, three_d in prop::bool::ANY) {
            let g = if three_d { Geometry::ThreeD } else { Geometry::OneD };
            let b = OhmicBath::new(0.3, 2.0, 1.5, g, 0.7).unwrap();
            prop_assert_eq!(classical_cross_psd(&b, 0.0, r).unwrap(), 2.0 * 1.5 * 0.3);
        }
    }
}
