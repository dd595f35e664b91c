//! Spurious and transient inter-qubit couplings induced by the quadratic noise
//! term of the bus Hamiltonian.
//!
//! Closed forms are paired with quadrature of their defining integrals over
//! the reservoir spectrum; the two routes are kept independent so that each
//! can be used to check the other.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, GcnError, Result};
use crate::noise::{propagation_kernel, Geometry, OhmicBath};
use crate::quadrature::{integrate, QuadOptions, QuadResult};
use crate::register::{GateDrive, RegisterLabel};

/// Upper limit of the reduced frequency `u = ω / ω_c`; `e^{-40} ≈ 4e-18`.
const TAIL_CUTOFF: f64 = 40.0;

/// Above this register length the transient shift uses the factorised sum.
pub const NAIVE_SHIFT_MAX_LEN: usize = 32;

/// `g(x)`: `(1 − x²)/(1 + x²)²` in 1D, `1/(1 + x²)` in 3D.
pub fn kernel_g(x: f64, geometry: Geometry) -> f64 {
    let x2 = x * x;
    match geometry {
        Geometry::OneD => (1.0 - x2) / ((1.0 + x2) * (1.0 + x2)),
        Geometry::ThreeD => 1.0 / (1.0 + x2),
    }
}

/// `h(x)`: `1/(1 + x²)` in 1D, `arctan(x)/x` in 3D.
pub fn kernel_h(x: f64, geometry: Geometry) -> f64 {
    match geometry {
        Geometry::OneD => 1.0 / (1.0 + x * x),
        Geometry::ThreeD => {
            if x.abs() < 1e-4 {
                let x2 = x * x;
                1.0 - x2 / 3.0 + x2 * x2 / 5.0
            } else {
                x.atan() / x
            }
        }
    }
}

/// `μ_sc(r) = (ω_c² τ_η / π) · g(ω_c r / v)`.
pub fn spurious_coupling(bath: &OhmicBath, r: f64) -> Result<f64> {
    require_non_negative("r", r)?;
    Ok(spurious_scale(bath) * kernel_g(bath.reduced_distance(r), bath.geometry()))
}

/// `μ_tr(r) = (2 τ_η ω_c / π) · h(ω_c r / v)`.
pub fn transient_coupling(bath: &OhmicBath, r: f64) -> Result<f64> {
    require_non_negative("r", r)?;
    Ok(transient_scale(bath) * kernel_h(bath.reduced_distance(r), bath.geometry()))
}

fn spurious_scale(bath: &OhmicBath) -> f64 {
    bath.cutoff() * bath.cutoff() * bath.coupling() / PI
}

fn transient_scale(bath: &OhmicBath) -> f64 {
    2.0 * bath.coupling() * bath.cutoff() / PI
}

/// Initial panel width for `f(x u)`: a quarter of the oscillation period.
fn panel_width(x: f64) -> f64 {
    if x > 0.0 {
        (0.5 * PI / x).min(1.0)
    } else {
        1.0
    }
}

fn quad_options(x: f64) -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        initial_panel: panel_width(x),
        max_panels: 400_000,
    }
}

fn scaled(result: QuadResult, scale: f64) -> QuadResult {
    QuadResult {
        value: result.value * scale,
        error: result.error * scale,
        panels: result.panels,
    }
}

/// Zero-temperature symmetrised correlator `(1/π) ∫₀^∞ dω J_jk(ω)`, integrated
/// numerically in `u = ω/ω_c`.
pub fn spurious_coupling_quadrature(bath: &OhmicBath, r: f64) -> Result<QuadResult> {
    require_non_negative("r", r)?;
    let x = bath.reduced_distance(r);
    let g = bath.geometry();
    let res = integrate(
        |u| u * (-u).exp() * propagation_kernel(x * u, g),
        0.0,
        TAIL_CUTOFF,
        &quad_options(x),
    )?;
    Ok(scaled(res, spurious_scale(bath)))
}

/// Finite-temperature variant `(1/π) ∫₀^∞ dω J_jk(ω) coth(ω / 2T)`.
///
/// Reduces to [`spurious_coupling_quadrature`] at `T = 0` and approaches the
/// classical correlator `(1/π) ∫ S_jk(ω) dω` for `T ≫ ω_c`.
pub fn spurious_coupling_thermal_quadrature(bath: &OhmicBath, r: f64) -> Result<QuadResult> {
    let t = bath.temperature();
    if t == 0.0 {
        return spurious_coupling_quadrature(bath, r);
    }
    require_non_negative("r", r)?;
    let x = bath.reduced_distance(r);
    let g = bath.geometry();
    let beta_half = bath.cutoff() / (2.0 * t);
    let res = integrate(
        |u| {
            let y = beta_half * u;
            // u coth(y) → 1 / beta_half as u → 0.
            let weighted = if y < 1e-8 { 1.0 / beta_half } else { u / y.tanh() };
            weighted * (-u).exp() * propagation_kernel(x * u, g)
        },
        0.0,
        TAIL_CUTOFF,
        &quad_options(x),
    )?;
    Ok(scaled(res, spurious_scale(bath)))
}

/// `(2/π) ∫₀^∞ (dω/ω) J_kn(ω)`, integrated numerically.
pub fn transient_coupling_quadrature(bath: &OhmicBath, r: f64) -> Result<QuadResult> {
    require_non_negative("r", r)?;
    let x = bath.reduced_distance(r);
    let g = bath.geometry();
    let res = integrate(
        |u| (-u).exp() * propagation_kernel(x * u, g),
        0.0,
        TAIL_CUTOFF,
        &quad_options(x),
    )?;
    Ok(scaled(res, transient_scale(bath)))
}

/// Classical equal-time correlator `⟨ξ_j ξ_k⟩ = (1/π) ∫₀^∞ S_jk(ω) dω` of the
/// high-temperature noise that the Monte-Carlo engine samples.
pub fn classical_correlator_quadrature(bath: &OhmicBath, r: f64) -> Result<QuadResult> {
    require_non_negative("r", r)?;
    if bath.temperature() <= 0.0 {
        return Err(GcnError::InvalidParameter {
            name: "temperature",
            reason: "classical correlator needs T > 0".into(),
        });
    }
    // S(ω) = 2 T τ_η e^{-ω/ω_c}, so the integral has the μ_tr shape times T.
    let res = transient_coupling_quadrature(bath, r)?;
    Ok(scaled(res, bath.temperature()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingKind {
    Spurious,
    Transient,
}

/// Symmetric matrix of pairwise couplings `μ_jk`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingMatrix {
    pub kind: CouplingKind,
    pub positions: Vec<f64>,
    values: Vec<f64>,
}

impl CouplingMatrix {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.len() + k]
    }

    pub fn distance(&self, j: usize, k: usize) -> f64 {
        (self.positions[j] - self.positions[k]).abs()
    }

    /// Row-major nested rows, for serialisation.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.len().max(1)).map(|c| c.to_vec()).collect()
    }

    /// Builds a matrix from explicit values; used for hand-made couplings.
    pub fn from_values(kind: CouplingKind, positions: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = positions.len();
        if values.len() != n * n {
            return Err(GcnError::LengthMismatch {
                what: "coupling values",
                got: values.len(),
                expected: n * n,
            });
        }
        Ok(Self {
            kind,
            positions,
            values,
        })
    }
}

/// `μ_jk` at `r_jk = |z_j − z_k|` from the closed forms.
pub fn coupling_matrix(bath: &OhmicBath, positions: &[f64], kind: CouplingKind) -> Result<CouplingMatrix> {
    if let Some(bad) = positions.iter().find(|z| !z.is_finite()) {
        return Err(GcnError::InvalidParameter {
            name: "positions",
            reason: format!("non-finite coordinate {bad}"),
        });
    }
    let n = positions.len();
    let mut values = vec![0.0; n * n];
    for j in 0..n {
        for k in j..n {
            let r = (positions[j] - positions[k]).abs();
            let mu = match kind {
                CouplingKind::Spurious => spurious_coupling(bath, r)?,
                CouplingKind::Transient => transient_coupling(bath, r)?,
            };
            values[j * n + k] = mu;
            values[k * n + j] = mu;
        }
    }
    Ok(CouplingMatrix {
        kind,
        positions: positions.to_vec(),
        values,
    })
}

fn check_shift_inputs(drive: &GateDrive, label: &RegisterLabel, mu: &CouplingMatrix) -> Result<()> {
    if mu.kind != CouplingKind::Transient {
        return Err(GcnError::InvalidParameter {
            name: "mu",
            reason: "transient energy shift needs a transient coupling matrix".into(),
        });
    }
    for (what, got) in [("drive", drive.len()), ("coupling matrix", mu.len())] {
        if got != label.len() {
            return Err(GcnError::LengthMismatch {
                what,
                got,
                expected: label.len(),
            });
        }
    }
    Ok(())
}

/// `ΔE_tr = ½ Σ_{jkln} φ_j φ_l μ_kn m_j m_k m_l m_n`, evaluated term by term.
pub fn transient_energy_shift_naive(drive: &GateDrive, label: &RegisterLabel, mu: &CouplingMatrix) -> Result<f64> {
    check_shift_inputs(drive, label, mu)?;
    let n = label.len();
    let phi = drive.phi();
    let m: Vec<f64> = label.spins().iter().map(|&s| f64::from(s)).collect();
    let mut total = 0.0;
    for j in 0..n {
        for k in 0..n {
            for l in 0..n {
                for q in 0..n {
                    total += phi[j] * phi[l] * mu.get(k, q) * m[j] * m[k] * m[l] * m[q];
                }
            }
        }
    }
    Ok(0.5 * total)
}

/// Same sum via `½ (Σ_j φ_j m_j)² · (mᵀ μ m)`.
pub fn transient_energy_shift_factorized(drive: &GateDrive, label: &RegisterLabel, mu: &CouplingMatrix) -> Result<f64> {
    check_shift_inputs(drive, label, mu)?;
    let n = label.len();
    let m: Vec<f64> = label.spins().iter().map(|&s| f64::from(s)).collect();
    let p = drive.projection(label)?;
    let mut quad = 0.0;
    for k in 0..n {
        let row: f64 = (0..n).map(|q| mu.get(k, q) * m[q]).sum();
        quad += m[k] * row;
    }
    Ok(0.5 * p * p * quad)
}

/// Transient four-qubit energy shift during gate operation.
pub fn transient_energy_shift(drive: &GateDrive, label: &RegisterLabel, mu: &CouplingMatrix) -> Result<f64> {
    if label.len() <= NAIVE_SHIFT_MAX_LEN {
        transient_energy_shift_naive(drive, label, mu)
    } else {
        transient_energy_shift_factorized(drive, label, mu)
    }
}

/// Factor `1 + L τ_η ω_c / 4π` by which the self-coupling terms enhance the
/// control fields.
pub fn drive_enhancement(len: usize, bath: &OhmicBath) -> Result<f64> {
    if len == 0 {
        return Err(GcnError::InvalidParameter {
            name: "L",
            reason: "register length must be >= 1".into(),
        });
    }
    Ok(1.0 + len as f64 * bath.coupling() * bath.cutoff() / (4.0 * PI))
}
