use serde::Serialize;

use super::{fit_rate, simulate_dephasing, CoherenceTrace, McConfig, RateEstimate, DEFAULT_FIT_WINDOW};
use crate::error::{GcnError, Result};
use crate::noise::{Geometry, NoiseTopology, OhmicBath};
use crate::rates::{rate_bus, rate_fsa_independent, rate_fsa_uniform, ArchitectureKind, ArchitectureModel};
use crate::register::{CoherencePair, GateDrive, RegisterLabel};

/// The cutoff must exceed the analytic rate by at least this factor.
pub const WHITE_NOISE_FACTOR: f64 = 20.0;
/// Cutoff-to-rate ratio used when building scenarios.
pub const DEFAULT_CUTOFF_RATIO: f64 = 200.0;
pub const REL_TOLERANCE: f64 = 0.05;
pub const Z_TOLERANCE: f64 = 3.0;

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub architecture: ArchitectureModel,
    pub pair: CoherencePair,
    pub bath: OhmicBath,
    pub topology: NoiseTopology,
    pub n_trajectories: usize,
    pub master_seed: u64,
    /// In units of the inverse analytic rate.
    pub fit_window: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationRecord {
    pub scenario: String,
    pub gamma_analytic: f64,
    pub gamma_hat: f64,
    pub stderr: f64,
    /// Absent when the analytic rate vanishes.
    pub rel_err: Option<f64>,
    pub z: f64,
    pub pass: bool,
}

impl ValidationRecord {
    pub fn new(scenario: impl Into<String>, gamma_analytic: f64, fit: &RateEstimate) -> Self {
        let diff = fit.gamma - gamma_analytic;
        let z = if diff == 0.0 { 0.0 } else { diff / fit.stderr };
        let rel_err = (gamma_analytic != 0.0).then(|| diff / gamma_analytic);
        let pass = z.abs() <= Z_TOLERANCE && rel_err.is_none_or(|r| r.abs() <= REL_TOLERANCE);
        Self {
            scenario: scenario.into(),
            gamma_analytic,
            gamma_hat: fit.gamma,
            stderr: fit.stderr,
            rel_err,
            z,
            pass,
        }
    }
}

impl Scenario {
    /// Closed-form rate for this scenario.
    ///
    /// For the bus, correlated sources act as one source at zero frequency.
    pub fn analytic_rate(&self) -> Result<f64> {
        let kind = self.architecture.kind();
        match (kind, &self.topology) {
            (ArchitectureKind::FsaUniform, NoiseTopology::Uniform) => Ok(rate_fsa_uniform(&self.bath, &self.pair)?.gamma),
            (ArchitectureKind::FsaIndependent, NoiseTopology::Independent) => {
                Ok(rate_fsa_independent(&self.bath, &self.pair)?.gamma)
            }
            (ArchitectureKind::Bus, topology) => {
                let drive = self.architecture.drive().ok_or(GcnError::InvalidParameter {
                    name: "drive",
                    reason: "bus architecture requires a gate drive".into(),
                })?;
                match topology {
                    NoiseTopology::Independent => {
                        let p = drive.projection(self.pair.left())?;
                        let pp = drive.projection(self.pair.right())?;
                        let sum: f64 = self
                            .pair
                            .left()
                            .spins()
                            .iter()
                            .zip(self.pair.right().spins())
                            .map(|(&a, &b)| (p * f64::from(a) - pp * f64::from(b)).powi(2))
                            .sum();
                        Ok(self.bath.coupling() * self.bath.temperature() * sum)
                    }
                    _ => Ok(rate_bus(&self.bath, &self.pair, drive)?.gamma),
                }
            }
            (kind, topo) => Err(GcnError::ScenarioMismatch(format!(
                "{} cannot be validated with {} noise",
                kind.name(),
                topo.name()
            ))),
        }
    }

    /// Simulation grid: sized from the analytic rate, or from the cutoff when
    /// the rate vanishes.
    pub fn mc_config(&self, gamma: f64) -> Result<McConfig> {
        let reference = if gamma > 0.0 {
            gamma
        } else {
            self.bath.cutoff() / DEFAULT_CUTOFF_RATIO
        };
        McConfig::for_rate(&self.bath, reference, self.fit_window, self.n_trajectories, self.master_seed)
    }

    pub fn simulate(&self, cfg: &McConfig) -> Result<CoherenceTrace> {
        simulate_dephasing(&self.architecture, &self.pair, &self.bath, &self.topology, cfg)
    }
}

/// Runs one scenario and compares the fitted rate with the closed form.
///
/// Passes when the relative error is at most 5% and `|z| ≤ 3`; with a
/// vanishing analytic rate only `|z|` is checked.
pub fn validate_against_analytic(scenario: &Scenario) -> Result<ValidationRecord> {
    let gamma = scenario.analytic_rate()?;
    let required = WHITE_NOISE_FACTOR * gamma;
    if scenario.bath.cutoff() < required {
        return Err(GcnError::WhiteNoiseGuard {
            omega_c: scenario.bath.cutoff(),
            gamma,
            required,
        });
    }
    let cfg = scenario.mc_config(gamma)?;
    let trace = scenario.simulate(&cfg)?;
    let reference = if gamma > 0.0 {
        gamma
    } else {
        scenario.bath.cutoff() / DEFAULT_CUTOFF_RATIO
    };
    let window = (cfg.fit_window.0 / reference, cfg.fit_window.1 / reference);
    let fit = fit_rate(&trace, window)?;
    Ok(ValidationRecord::new(scenario.name.clone(), gamma, &fit))
}

fn label(s: &str) -> RegisterLabel {
    s.parse().expect("built-in label")
}

/// The built-in validation suite with unit coupling and temperature.
///
/// * six uniform-source pairs, each with `ω_c = 200 Γ`;
/// * the independent-source sweep `N_d = 0..6` at `L = 6`;
/// * one driven bus pair on four qubits.
pub fn default_suite(n_trajectories: usize, master_seed: u64) -> Result<Vec<Scenario>> {
    let mut out = Vec::new();
    let unit = |omega_c: f64| OhmicBath::new(1.0, omega_c, 1.0, Geometry::OneD, 1.0);

    let uniform_pairs = [
        ("++", "+-"),
        ("+++", "++-"),
        ("+++", "+--"),
        ("++++", "+++-"),
        ("++++", "++--"),
        ("+++-", "++--"),
    ];
    for (i, (a, b)) in uniform_pairs.into_iter().enumerate() {
        let pair = CoherencePair::new(label(a), label(b))?;
        let gamma = rate_fsa_uniform(&unit(1.0)?, &pair)?.gamma;
        out.push(Scenario {
            name: format!("fsa_uniform {a}/{b}"),
            architecture: ArchitectureModel::simple(ArchitectureKind::FsaUniform, pair.len())?,
            pair,
            bath: unit(DEFAULT_CUTOFF_RATIO * gamma)?,
            topology: NoiseTopology::Uniform,
            n_trajectories,
            master_seed: master_seed.wrapping_add(i as u64),
            fit_window: DEFAULT_FIT_WINDOW,
        });
    }

    let len = 6;
    let peak = (len / 2 * (len - len / 2)) as f64 / 16.0;
    let up = RegisterLabel::uniform(len, true)?;
    for nd in 0..=len {
        let flips: Vec<usize> = (0..nd).collect();
        let pair = CoherencePair::new(up.clone(), up.with_flips(&flips)?)?;
        out.push(Scenario {
            name: format!("fsa_independent L=6 Nd={nd}"),
            architecture: ArchitectureModel::simple(ArchitectureKind::FsaIndependent, len)?,
            pair,
            bath: unit(DEFAULT_CUTOFF_RATIO * peak)?,
            topology: NoiseTopology::Independent,
            n_trajectories,
            master_seed: master_seed.wrapping_add(100 + nd as u64),
            fit_window: DEFAULT_FIT_WINDOW,
        });
    }

    let drive = GateDrive::new(vec![1.0, 1.0, 0.0, 0.0])?;
    let pair = CoherencePair::new(label("++++"), label("+-++"))?;
    let gamma = rate_bus(&unit(1.0)?, &pair, &drive)?.gamma;
    out.push(Scenario {
        name: "bus ++++/+-++".into(),
        architecture: ArchitectureModel::new(ArchitectureKind::Bus, 4, Some(drive))?,
        pair,
        bath: unit(DEFAULT_CUTOFF_RATIO * gamma)?,
        topology: NoiseTopology::Uniform,
        n_trajectories,
        master_seed: master_seed.wrapping_add(200),
        fit_window: DEFAULT_FIT_WINDOW,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_rates() {
        let suite = default_suite(10_000, 1).unwrap();
        let rates: Vec<f64> = suite.iter().map(|s| s.analytic_rate().unwrap()).collect();
        let expected = [
            4.0, 16.0, 16.0, 36.0, 64.0, 4.0, 0.0, 0.3125, 0.5, 0.5625, 0.5, 0.3125, 0.0, 64.0,
        ];
        assert_eq!(rates.len(), expected.len());
        for (r, e) in rates.iter().zip(expected) {
            assert!((r - e).abs() < 1e-12, "{r} vs {e}");
        }
    }

    #[test]
    fn guard_trips_on_slow_cutoff() {
        let mut s = default_suite(100, 1).unwrap().remove(0);
        s.bath = OhmicBath::new(1.0, 50.0, 1.0, Geometry::OneD, 1.0).unwrap();
        assert!(matches!(
            validate_against_analytic(&s),
            Err(GcnError::WhiteNoiseGuard { required, .. }) if required == 80.0
        ));
    }

    #[test]
    fn record_z_conventions() {
        let fit = RateEstimate {
            gamma: 0.0,
            stderr: 0.0,
            intercept: 0.0,
            r_squared: 1.0,
            n_points: 10,
            t_min: 0.0,
            t_max: 1.0,
        };
        let r = ValidationRecord::new("x", 0.0, &fit);
        assert_eq!(r.z, 0.0);
        assert!(r.rel_err.is_none());
        assert!(r.pass);
        let fit = RateEstimate { gamma: 1.06, stderr: 0.1, ..fit };
        let r = ValidationRecord::new("x", 1.0, &fit);
        assert!(!r.pass);
        assert!((r.z - 0.6).abs() < 1e-12);
    }
}
