//! Analytic dephasing rates for the switched-array, bus, hypercube and
//! processor-core architectures, together with the brute-force pair sums and
//! worst-case scaling laws.

use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, GcnError, Result};
use crate::noise::OhmicBath;
use crate::register::{
    enumerate_labels, pointer_bus, pointer_fsa_pair, pointer_fsa_uniform, total_spin,
    CoherencePair, GateDrive, RegisterLabel,
};

/// Largest register handled by the brute-force pair-sum oracle.
pub const MAX_BRUTEFORCE_LEN: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchitectureKind {
    FsaUniform,
    FsaIndependent,
    Bus,
    Hypercube,
    ProcessorCore,
}

impl ArchitectureKind {
    pub fn name(self) -> &'static str {
        match self {
            ArchitectureKind::FsaUniform => "fsa_uniform",
            ArchitectureKind::FsaIndependent => "fsa_independent",
            ArchitectureKind::Bus => "bus",
            ArchitectureKind::Hypercube => "hypercube",
            ArchitectureKind::ProcessorCore => "processor_core",
        }
    }
}

/// Statistics of the gate control noise across couplers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// One global source feeding every coupler.
    Central,
    /// One independent source per coupler.
    Independent,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Central => "central",
            NoiseKind::Independent => "independent",
        }
    }
}

/// An architecture of register length `len`.
///
/// For the processor core `len` counts the core qubits; each core qubit is
/// paired with one storage qubit, so its register holds `2 · len` qubits and
/// gate `i` couples qubits `i` and `len + i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ArchitectureModel {
    kind: ArchitectureKind,
    len: usize,
    drive: Option<GateDrive>,
}

impl ArchitectureModel {
    pub fn new(kind: ArchitectureKind, len: usize, drive: Option<GateDrive>) -> Result<Self> {
        if len == 0 {
            return Err(GcnError::InvalidParameter {
                name: "L",
                reason: "register length must be >= 1".into(),
            });
        }
        match kind {
            ArchitectureKind::Hypercube if len < 2 || !len.is_power_of_two() => {
                return Err(GcnError::InvalidParameter {
                    name: "L",
                    reason: format!("hypercube needs L = 2^d with d >= 1, got {len}"),
                });
            }
            ArchitectureKind::Bus => match &drive {
                None => {
                    return Err(GcnError::InvalidParameter {
                        name: "drive",
                        reason: "bus architecture requires a gate drive".into(),
                    })
                }
                Some(d) if d.len() != len => {
                    return Err(GcnError::LengthMismatch {
                        what: "drive",
                        got: d.len(),
                        expected: len,
                    })
                }
                _ => {}
            },
            _ => {}
        }
        Ok(Self { kind, len, drive })
    }

    pub fn simple(kind: ArchitectureKind, len: usize) -> Result<Self> {
        Self::new(kind, len, None)
    }

    /// Bus register with one unit-amplitude gate active on qubits 0 and 1.
    pub fn bus_with_active_gate(len: usize) -> Result<Self> {
        Self::new(
            ArchitectureKind::Bus,
            len,
            Some(GateDrive::active_pair(len, 0, 1, 1.0)?),
        )
    }

    pub fn kind(&self) -> ArchitectureKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn drive(&self) -> Option<&GateDrive> {
        self.drive.as_ref()
    }

    /// Number of physical qubits whose labels enter the pointer variables.
    pub fn n_qubits(&self) -> usize {
        match self.kind {
            ArchitectureKind::ProcessorCore => 2 * self.len,
            _ => self.len,
        }
    }

    /// Gate graph for the hypercube and processor-core layouts.
    pub fn gate_edges(&self) -> Vec<(usize, usize)> {
        match self.kind {
            ArchitectureKind::Hypercube => {
                let dim = self.len.trailing_zeros();
                (0..self.len)
                    .flat_map(|j| {
                        (0..dim)
                            .map(move |b| (j, j ^ (1 << b)))
                            .filter(|&(j, k)| j < k)
                    })
                    .collect()
            }
            ArchitectureKind::ProcessorCore => (0..self.len).map(|i| (i, self.len + i)).collect(),
            ArchitectureKind::FsaUniform | ArchitectureKind::FsaIndependent => (0..self.len)
                .flat_map(|j| (j + 1..self.len).map(move |k| (j, k)))
                .collect(),
            ArchitectureKind::Bus => Vec::new(),
        }
    }

    fn require_drive(&self) -> Result<&GateDrive> {
        self.drive.as_ref().ok_or(GcnError::InvalidParameter {
            name: "drive",
            reason: "bus architecture requires a gate drive".into(),
        })
    }
}

/// Contribution of one independent noise source.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SourceRate {
    pub j: usize,
    pub k: usize,
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateResult {
    pub gamma: f64,
    /// `(Q − Q′)²`, or `Σ_s (Q_s − Q′_s)²` for a set of independent sources.
    pub pointer_delta_sq: f64,
    pub breakdown: Option<Vec<SourceRate>>,
}

/// `Γ = S(0) (Q − Q′)² / 2`.
pub fn dephasing_rate(s0: f64, q: f64, qp: f64) -> Result<f64> {
    require_non_negative("S0", s0)?;
    let d = q - qp;
    Ok(0.5 * s0 * d * d)
}

fn require_hot(bath: &OhmicBath) -> Result<()> {
    if bath.temperature() > 0.0 {
        Ok(())
    } else {
        Err(GcnError::InvalidParameter {
            name: "temperature",
            reason: "rates are defined in the classical limit, need T > 0".into(),
        })
    }
}

/// Fully switched array with one central noise source:
/// `Γ = (s_η T / 4) (M² − M′²)²`.
pub fn rate_fsa_uniform(bath: &OhmicBath, pair: &CoherencePair) -> Result<RateResult> {
    require_hot(bath)?;
    let m = pair.total_spin_left() as f64;
    let mp = pair.total_spin_right() as f64;
    let d = m * m - mp * mp;
    let dq = pointer_fsa_uniform(pair.left()) - pointer_fsa_uniform(pair.right());
    Ok(RateResult {
        gamma: bath.coupling() * bath.temperature() / 4.0 * d * d,
        pointer_delta_sq: dq * dq,
        breakdown: None,
    })
}

/// Fully switched array with independent sources:
/// `Γ = (s_η T / 16) (L − N_d) N_d`.
pub fn rate_fsa_independent(bath: &OhmicBath, pair: &CoherencePair) -> Result<RateResult> {
    require_hot(bath)?;
    let len = pair.len() as f64;
    let nd = pair.hamming_distance() as f64;
    Ok(RateResult {
        gamma: bath.coupling() * bath.temperature() / 16.0 * (len - nd) * nd,
        // Each source with a flipped product contributes (ΔQ_jk)² = 1.
        pointer_delta_sq: (len - nd) * nd,
        breakdown: None,
    })
}

/// Raw per-source sum `Σ_{j<k} S(0) (Q_jk − Q′_jk)² / 2` without calibration.
fn fsa_pair_sum(bath: &OhmicBath, pair: &CoherencePair, scale: f64) -> Result<RateResult> {
    let len = pair.len();
    let s0 = bath.zero_frequency_psd()?;
    let mut sources = Vec::with_capacity(len * len.saturating_sub(1) / 2);
    let mut delta_sq = 0.0;
    for j in 0..len {
        for k in j + 1..len {
            let q = pointer_fsa_pair(pair.left(), j, k)?;
            let qp = pointer_fsa_pair(pair.right(), j, k)?;
            delta_sq += (q - qp) * (q - qp);
            sources.push(SourceRate {
                j,
                k,
                gamma: scale * dephasing_rate(s0, q, qp)?,
            });
        }
    }
    Ok(RateResult {
        gamma: sources.iter().map(|s| s.gamma).sum(),
        pointer_delta_sq: delta_sq,
        breakdown: Some(sources),
    })
}

/// Calibration constant of the independent-source pair sum.
///
/// Fixed once at the anchor `(++, +−)`, where the closed form and the raw
/// pair sum are both evaluated with unit bath parameters. The value is 1/16.
pub fn fsa_independent_calibration() -> f64 {
    let bath = OhmicBath::new(1.0, 1.0, 1.0, crate::noise::Geometry::OneD, 1.0)
        .expect("unit bath is valid");
    let anchor = CoherencePair::parse("++", "+-").expect("anchor labels are valid");
    let closed = rate_fsa_independent(&bath, &anchor).expect("unit bath is hot").gamma;
    let raw = fsa_pair_sum(&bath, &anchor, 1.0).expect("unit bath is hot").gamma;
    closed / raw
}

/// Independent-source rate as an explicit sum over all gate pointers.
pub fn rate_fsa_independent_bruteforce(bath: &OhmicBath, pair: &CoherencePair) -> Result<RateResult> {
    require_hot(bath)?;
    if pair.len() > MAX_BRUTEFORCE_LEN {
        return Err(GcnError::GuardExceeded {
            what: "register length",
            value: pair.len(),
            max: MAX_BRUTEFORCE_LEN,
        });
    }
    fsa_pair_sum(bath, pair, fsa_independent_calibration())
}

/// Bus architecture during gate operation: `Γ = τ_η T (Q − Q′)²` with
/// `Q = M Σ_j φ_j m_j`.
pub fn rate_bus(bath: &OhmicBath, pair: &CoherencePair, drive: &GateDrive) -> Result<RateResult> {
    require_hot(bath)?;
    let q = pointer_bus(pair.left(), drive)?;
    let qp = pointer_bus(pair.right(), drive)?;
    let d = q - qp;
    Ok(RateResult {
        gamma: bath.coupling() * bath.temperature() * d * d,
        pointer_delta_sq: d * d,
        breakdown: None,
    })
}

/// Number of gates exposed to control noise.
pub fn gate_count(arch: &ArchitectureModel) -> usize {
    let len = arch.len();
    match arch.kind() {
        ArchitectureKind::FsaUniform | ArchitectureKind::FsaIndependent => len * (len + 1) / 2,
        // One control line per qubit.
        ArchitectureKind::Bus => len,
        ArchitectureKind::Hypercube => len / 2 * len.trailing_zeros() as usize,
        ArchitectureKind::ProcessorCore => len,
    }
}

fn check_noise(arch: &ArchitectureModel, noise: NoiseKind) -> Result<()> {
    match (arch.kind(), noise) {
        (ArchitectureKind::FsaUniform, NoiseKind::Independent) => Err(GcnError::ScenarioMismatch(
            "fsa_uniform describes a central source; use fsa_independent".into(),
        )),
        (ArchitectureKind::FsaIndependent, NoiseKind::Central) => Err(GcnError::ScenarioMismatch(
            "fsa_independent describes independent sources; use fsa_uniform".into(),
        )),
        _ => Ok(()),
    }
}

/// Rate of `pair` with unit per-gate rate constant, i.e. the pointer
/// excursion that multiplies the bath prefactor.
pub fn relative_rate(arch: &ArchitectureModel, noise: NoiseKind, pair: &CoherencePair) -> Result<f64> {
    check_noise(arch, noise)?;
    if pair.len() != arch.n_qubits() {
        return Err(GcnError::LengthMismatch {
            what: "coherence pair",
            got: pair.len(),
            expected: arch.n_qubits(),
        });
    }
    let (m, mp) = (pair.left(), pair.right());
    Ok(match arch.kind() {
        ArchitectureKind::FsaUniform => {
            let (a, b) = (total_spin(m) as f64, total_spin(mp) as f64);
            (a * a - b * b).powi(2)
        }
        ArchitectureKind::FsaIndependent => {
            let nd = pair.hamming_distance() as f64;
            nd * (pair.len() as f64 - nd)
        }
        ArchitectureKind::Bus => {
            let drive = arch.require_drive()?;
            match noise {
                NoiseKind::Central => (pointer_bus(m, drive)? - pointer_bus(mp, drive)?).powi(2),
                NoiseKind::Independent => {
                    let (p, pp) = (drive.projection(m)?, drive.projection(mp)?);
                    m.spins()
                        .iter()
                        .zip(mp.spins())
                        .map(|(&a, &b)| (p * f64::from(a) - pp * f64::from(b)).powi(2))
                        .sum()
                }
            }
        }
        ArchitectureKind::Hypercube | ArchitectureKind::ProcessorCore => {
            let deltas = arch.gate_edges().into_iter().map(|(j, k)| {
                f64::from(m.spin(j) * m.spin(k) - mp.spin(j) * mp.spin(k)) / 2.0
            });
            match noise {
                NoiseKind::Central => deltas.sum::<f64>().powi(2),
                NoiseKind::Independent => deltas.map(|d| d * d).sum(),
            }
        }
    })
}

/// Bus drives for which the worst case has a closed form: one active pair of
/// equal magnitude. Returns the two active qubits.
fn active_pair_of(drive: &GateDrive) -> Result<(usize, usize)> {
    let active: Vec<usize> = (0..drive.len()).filter(|&j| drive.phi()[j] != 0.0).collect();
    match active.as_slice() {
        &[a, b] if drive.phi()[a].abs() == drive.phi()[b].abs() => Ok((a, b)),
        _ => Err(GcnError::ScenarioMismatch(
            "bus worst case needs exactly one active gate with equal control amplitudes".into(),
        )),
    }
}

/// A pair attaining the architecture's worst-case relative rate.
///
/// For the bus the partner label is restricted to the gate-neutral sector
/// (`Σ_j φ_j m′_j = 0`, hence `Q′ = 0`), so the metric is the largest pointer
/// excursion `max_m Q(m)²`.
pub fn worst_case_pair(arch: &ArchitectureModel, noise: NoiseKind) -> Result<CoherencePair> {
    check_noise(arch, noise)?;
    let n = arch.n_qubits();
    let up = RegisterLabel::uniform(n, true)?;
    let pair = match arch.kind() {
        ArchitectureKind::FsaUniform => {
            // M = L against the smallest |M′|, which is 0 or 1.
            let alternating = RegisterLabel::new((0..n).map(|j| if j % 2 == 0 { 1 } else { -1 }).collect())?;
            CoherencePair::new(up, alternating)?
        }
        ArchitectureKind::FsaIndependent => {
            let flips: Vec<usize> = (0..n / 2).collect();
            let right = up.with_flips(&flips)?;
            CoherencePair::new(up, right)?
        }
        ArchitectureKind::Bus => {
            let drive = arch.require_drive()?;
            let (a, b) = active_pair_of(drive)?;
            let aligned = drive.phi()[a].signum() == drive.phi()[b].signum();
            let left = if aligned { up } else { up.with_flips(&[b])? };
            let right = left.with_flips(&[b])?;
            CoherencePair::new(left, right)?
        }
        ArchitectureKind::Hypercube => {
            // Néel state: flip every vertex of odd parity, which cuts all edges.
            let odd: Vec<usize> = (0..n).filter(|j| j.count_ones() % 2 == 1).collect();
            let right = up.with_flips(&odd)?;
            CoherencePair::new(up, right)?
        }
        ArchitectureKind::ProcessorCore => {
            let core: Vec<usize> = (0..arch.len()).collect();
            let right = up.with_flips(&core)?;
            CoherencePair::new(up, right)?
        }
    };
    Ok(pair)
}

/// Exhaustive search for the worst-case relative rate (`n_qubits ≤ 12`).
///
/// Bus partners are restricted to the gate-neutral sector as in
/// [`worst_case_pair`].
pub fn worst_case_pair_enumerated(arch: &ArchitectureModel, noise: NoiseKind) -> Result<(CoherencePair, f64)> {
    check_noise(arch, noise)?;
    let labels = enumerate_labels(arch.n_qubits())?;
    let partners: Vec<&RegisterLabel> = match (arch.kind(), arch.drive()) {
        (ArchitectureKind::Bus, Some(drive)) => labels
            .iter()
            .filter(|l| drive.projection(l).map(|p| p == 0.0).unwrap_or(false))
            .collect(),
        _ => labels.iter().collect(),
    };
    let mut best: Option<(CoherencePair, f64)> = None;
    for left in &labels {
        for right in &partners {
            let pair = CoherencePair::new(left.clone(), (*right).clone())?;
            let rate = relative_rate(arch, noise, &pair)?;
            if best.as_ref().is_none_or(|(_, b)| rate > *b) {
                best = Some((pair, rate));
            }
        }
    }
    best.ok_or_else(|| GcnError::ScenarioMismatch("no admissible coherence pair".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub len: usize,
    pub relative_rate: f64,
    /// `ln(r_i / r_{i-1}) / ln(L_i / L_{i-1})`; absent on the first row.
    pub local_exponent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingTable {
    pub architecture: ArchitectureKind,
    pub noise: NoiseKind,
    pub rows: Vec<ScalingRow>,
}

impl ScalingTable {
    /// Least-squares slope of `ln rate` against `ln L`.
    pub fn fitted_exponent(&self) -> Option<f64> {
        let points: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.relative_rate > 0.0)
            .map(|r| ((r.len as f64).ln(), r.relative_rate.ln()))
            .collect();
        log_log_slope(&points)
    }
}

/// Ordinary least-squares slope through `(x, y)` points.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Worst-case relative rate as a function of register length.
///
/// Bus registers use one unit-amplitude gate on qubits 0 and 1.
pub fn scaling_scan(kind: ArchitectureKind, noise: NoiseKind, lens: &[usize]) -> Result<ScalingTable> {
    if lens.is_empty() {
        return Err(GcnError::InvalidParameter {
            name: "L_values",
            reason: "at least one register length is required".into(),
        });
    }
    let mut rows: Vec<ScalingRow> = Vec::with_capacity(lens.len());
    for &len in lens {
        let arch = match kind {
            ArchitectureKind::Bus => ArchitectureModel::bus_with_active_gate(len)?,
            _ => ArchitectureModel::simple(kind, len)?,
        };
        let pair = worst_case_pair(&arch, noise)?;
        let rate = relative_rate(&arch, noise, &pair)?;
        let local_exponent = rows.last().and_then(|prev: &ScalingRow| {
            (prev.relative_rate > 0.0 && rate > 0.0 && prev.len != len)
                .then(|| (rate / prev.relative_rate).ln() / (len as f64 / prev.len as f64).ln())
        });
        rows.push(ScalingRow {
            len,
            relative_rate: rate,
            local_exponent,
        });
    }
    Ok(ScalingTable {
        architecture: kind,
        noise,
        rows,
    })
}
