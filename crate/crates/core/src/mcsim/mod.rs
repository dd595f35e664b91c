//! Monte-Carlo stochastic dephasing.
//!
//! Each trajectory draws one bundle of classical noise series, integrates the
//! energy gap `E_m(t) − E_{m′}(t)` of a coherence pair with the trapezoidal
//! rule, and contributes `e^{−iφ(t)}` to the ensemble mean. Trajectories are
//! split into a fixed set of contiguous groups; groups may run on any number
//! of threads, are summed with compensated arithmetic, and are reduced by a
//! pairwise tree in group order, so the result depends only on the seed.
//! The same groups provide delete-a-group jackknife error bars.

mod fit;
mod validate;

pub use fit::{fit_phase_drift, fit_rate, DriftEstimate, RateEstimate};
pub use validate::{
    default_suite, validate_against_analytic, Scenario, ValidationRecord, DEFAULT_CUTOFF_RATIO, REL_TOLERANCE,
    WHITE_NOISE_FACTOR, Z_TOLERANCE,
};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GcnError, Result};
use crate::noise::synthesis::{validate_grid, Scratch};
use crate::noise::{stream_rng, NoiseSynthesizer, NoiseTopology, OhmicBath, MAX_DT_OMEGA_C};
use crate::rates::{fsa_independent_calibration, ArchitectureKind, ArchitectureModel};
use crate::register::{pointer_fsa_pair, pointer_fsa_uniform, CoherencePair, GateDrive};

pub const MIN_TRAJECTORIES: usize = 100;
/// Number of jackknife groups (fewer if there are fewer trajectories).
pub const JACKKNIFE_GROUPS: usize = 256;
/// Recorded trace points are thinned to at most about this many.
pub const MAX_RECORDED: usize = 2048;
/// Grids longer than this are rejected.
pub const MAX_STEPS: usize = 1 << 24;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McConfig {
    pub n_trajectories: usize,
    pub dt: f64,
    pub n_steps: usize,
    pub master_seed: u64,
    /// Fit window in units of the inverse analytic rate.
    pub fit_window: (f64, f64),
    /// Record the coherence every this many steps.
    pub record_every: usize,
}

pub const DEFAULT_FIT_WINDOW: (f64, f64) = (0.5, 3.0);

impl McConfig {
    /// Grid covering `duration` at the coarsest step that resolves the cutoff.
    pub fn for_duration(bath: &OhmicBath, duration: f64, n_trajectories: usize, master_seed: u64) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(GcnError::InvalidGrid(format!("duration must be > 0, got {duration}")));
        }
        let dt = MAX_DT_OMEGA_C / bath.cutoff();
        let needed = (duration / dt).ceil() as usize + 1;
        if needed > MAX_STEPS {
            return Err(GcnError::InvalidGrid(format!(
                "{needed} steps needed to cover t = {duration}, limit {MAX_STEPS}"
            )));
        }
        let n_steps = needed.next_power_of_two().max(2);
        Ok(Self {
            n_trajectories,
            dt,
            n_steps,
            master_seed,
            fit_window: DEFAULT_FIT_WINDOW,
            record_every: n_steps.div_ceil(MAX_RECORDED),
        })
    }

    /// Grid sized for a coherence decaying at rate `gamma`.
    pub fn for_rate(
        bath: &OhmicBath,
        gamma: f64,
        fit_window: (f64, f64),
        n_trajectories: usize,
        master_seed: u64,
    ) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(GcnError::InvalidParameter {
                name: "gamma",
                reason: format!("need a positive rate to size the grid, got {gamma}"),
            });
        }
        let span = fit_window.1.max(3.0);
        let mut cfg = Self::for_duration(bath, span / gamma, n_trajectories, master_seed)?;
        cfg.fit_window = fit_window;
        Ok(cfg)
    }

    pub fn duration(&self) -> f64 {
        (self.n_steps - 1) as f64 * self.dt
    }

    pub fn validate(&self, bath: &OhmicBath) -> Result<()> {
        if self.n_trajectories < MIN_TRAJECTORIES {
            return Err(GcnError::InvalidParameter {
                name: "n_trajectories",
                reason: format!("need at least {MIN_TRAJECTORIES}, got {}", self.n_trajectories),
            });
        }
        if self.record_every == 0 {
            return Err(GcnError::InvalidParameter {
                name: "record_every",
                reason: "must be >= 1".into(),
            });
        }
        let (lo, hi) = self.fit_window;
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi) {
            return Err(GcnError::InvalidParameter {
                name: "fit_window",
                reason: format!("need 0 <= t_min < t_max, got ({lo}, {hi})"),
            });
        }
        if self.n_steps > MAX_STEPS {
            return Err(GcnError::InvalidGrid(format!("n_steps {} exceeds {MAX_STEPS}", self.n_steps)));
        }
        validate_grid(bath, self.dt, self.n_steps)
    }
}

/// Ensemble-averaged coherence `⟨e^{−iφ(t)}⟩`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoherenceTrace {
    pub times: Vec<f64>,
    pub abs_coherence: Vec<f64>,
    /// Phase of the mean coherence, unwrapped along time.
    pub arg_coherence: Vec<f64>,
    /// Jackknife standard error of `abs_coherence`.
    pub stderr: Vec<f64>,
    pub n_samples: usize,
    /// Leave-one-group-out mean coherences, one series per group.
    #[serde(skip)]
    pub replicates: Vec<Vec<Complex64>>,
}

impl CoherenceTrace {
    /// Trace without replicates, e.g. from an analytic model.
    pub fn from_values(times: Vec<f64>, abs_coherence: Vec<f64>, stderr: Vec<f64>) -> Result<Self> {
        let n = times.len();
        for (what, len) in [("abs_coherence", abs_coherence.len()), ("stderr", stderr.len())] {
            if len != n {
                return Err(GcnError::LengthMismatch { what, got: len, expected: n });
            }
        }
        Ok(Self {
            arg_coherence: vec![0.0; n],
            times,
            abs_coherence,
            stderr,
            n_samples: 0,
            replicates: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// How the energy gap of a coherence pair depends on the noise series.
#[derive(Clone, Debug)]
enum GapModel {
    /// `ΔE = Σ_s w_s ξ_s`.
    Linear(Vec<f64>),
    /// `E_m = (P_m + X_m)² / 8 − P_m² / 8` with `X_m = Σ_s c_{m,s} ξ_s`.
    BusFull {
        p_left: f64,
        p_right: f64,
        c_left: Vec<f64>,
        c_right: Vec<f64>,
    },
}

impl GapModel {
    #[inline]
    fn gap(&self, series: &[Vec<f64>], n: usize) -> f64 {
        match self {
            GapModel::Linear(w) => w.iter().zip(series).map(|(w, s)| w * s[n]).sum(),
            GapModel::BusFull {
                p_left,
                p_right,
                c_left,
                c_right,
            } => {
                let mut x = 0.0;
                let mut xp = 0.0;
                for ((cl, cr), s) in c_left.iter().zip(c_right).zip(series) {
                    x += cl * s[n];
                    xp += cr * s[n];
                }
                0.25 * (p_left * x - p_right * xp) + 0.125 * (x * x - xp * xp)
            }
        }
    }
}

/// Per-source coefficients for each label of the pair; sources with zero
/// coefficients are dropped before synthesis.
struct SourcePlan {
    topology: NoiseTopology,
    n_sources: usize,
    model: GapModel,
}

fn plan_linear(topology: &NoiseTopology, weights: Vec<f64>) -> SourcePlan {
    match topology {
        NoiseTopology::Uniform => SourcePlan {
            topology: NoiseTopology::Uniform,
            n_sources: 1,
            model: GapModel::Linear(vec![weights.iter().sum()]),
        },
        NoiseTopology::Independent => {
            let active: Vec<f64> = weights.into_iter().filter(|&w| w != 0.0).collect();
            SourcePlan {
                topology: NoiseTopology::Independent,
                n_sources: active.len(),
                model: GapModel::Linear(active),
            }
        }
        NoiseTopology::Spatial { positions } => {
            // Dropping sites keeps the joint law of the remaining ones.
            let (pos, w): (Vec<f64>, Vec<f64>) = positions
                .iter()
                .zip(weights)
                .filter(|(_, w)| *w != 0.0)
                .map(|(z, w)| (*z, w))
                .unzip();
            SourcePlan {
                topology: NoiseTopology::Spatial { positions: pos },
                n_sources: w.len(),
                model: GapModel::Linear(w),
            }
        }
    }
}

fn plan_bus_full(topology: &NoiseTopology, pair: &CoherencePair, drive: &GateDrive) -> Result<SourcePlan> {
    let p_left = drive.projection(pair.left())?;
    let p_right = drive.projection(pair.right())?;
    let spins = |l: &crate::register::RegisterLabel| -> Vec<f64> { l.spins().iter().map(|&m| f64::from(m)).collect() };
    let (c_left, c_right) = (spins(pair.left()), spins(pair.right()));
    let topology = match topology {
        NoiseTopology::Uniform => {
            let model = GapModel::BusFull {
                p_left,
                p_right,
                c_left: vec![c_left.iter().sum()],
                c_right: vec![c_right.iter().sum()],
            };
            return Ok(SourcePlan {
                topology: NoiseTopology::Uniform,
                n_sources: 1,
                model,
            });
        }
        other => other.clone(),
    };
    Ok(SourcePlan {
        n_sources: c_left.len(),
        topology,
        model: GapModel::BusFull {
            p_left,
            p_right,
            c_left,
            c_right,
        },
    })
}

fn require_len(pair: &CoherencePair, expected: usize) -> Result<()> {
    if pair.len() == expected {
        Ok(())
    } else {
        Err(GcnError::LengthMismatch {
            what: "coherence pair",
            got: pair.len(),
            expected,
        })
    }
}

fn require_topology_len(topology: &NoiseTopology, len: usize) -> Result<()> {
    match topology {
        NoiseTopology::Spatial { positions } if positions.len() != len => Err(GcnError::LengthMismatch {
            what: "positions",
            got: positions.len(),
            expected: len,
        }),
        _ => Ok(()),
    }
}

/// Dephasing under the effective coupling `Σ_s Ξ_s(t) Q̂_s`.
///
/// * `FsaUniform` needs a uniform topology: one source with `Q = M²/2`.
/// * `FsaIndependent` needs an independent topology: one source per gate
///   `j < k` with `Q_jk = m_j m_k / 2`, amplitude scaled by the square root of
///   [`fsa_independent_calibration`].
/// * `Bus` accepts any topology: site `k` couples through
///   `(Σ_j φ_j m_j) m_k`, which for a uniform source is `Q = M Σ_j φ_j m_j`.
pub fn simulate_dephasing(
    arch: &ArchitectureModel,
    pair: &CoherencePair,
    bath: &OhmicBath,
    topology: &NoiseTopology,
    cfg: &McConfig,
) -> Result<CoherenceTrace> {
    require_len(pair, arch.n_qubits())?;
    let plan = match (arch.kind(), topology) {
        (ArchitectureKind::FsaUniform, NoiseTopology::Uniform) => {
            let dq = pointer_fsa_uniform(pair.left()) - pointer_fsa_uniform(pair.right());
            plan_linear(topology, vec![dq])
        }
        (ArchitectureKind::FsaIndependent, NoiseTopology::Independent) => {
            let amp = fsa_independent_calibration().sqrt();
            let len = pair.len();
            let mut weights = Vec::with_capacity(len * len.saturating_sub(1) / 2);
            for j in 0..len {
                for k in j + 1..len {
                    let dq = pointer_fsa_pair(pair.left(), j, k)? - pointer_fsa_pair(pair.right(), j, k)?;
                    weights.push(amp * dq);
                }
            }
            plan_linear(topology, weights)
        }
        (ArchitectureKind::Bus, _) => {
            require_topology_len(topology, pair.len())?;
            let drive = arch.drive().ok_or(GcnError::InvalidParameter {
                name: "drive",
                reason: "bus architecture requires a gate drive".into(),
            })?;
            let p_left = drive.projection(pair.left())?;
            let p_right = drive.projection(pair.right())?;
            let weights = pair
                .left()
                .spins()
                .iter()
                .zip(pair.right().spins())
                .map(|(&m, &mp)| p_left * f64::from(m) - p_right * f64::from(mp))
                .collect();
            plan_linear(topology, weights)
        }
        (kind, topo) => {
            return Err(GcnError::ScenarioMismatch(format!(
                "{} cannot be simulated with {} noise",
                kind.name(),
                topo.name()
            )))
        }
    };
    run(bath, plan, cfg)
}

/// Dephasing under the full quadratic bus Hamiltonian
/// `H = ½ (Σ_j (φ_j + ξ_j) Z_j / 2)²`, with the noise-free phase removed.
pub fn simulate_bus_full(
    drive: &GateDrive,
    pair: &CoherencePair,
    bath: &OhmicBath,
    topology: &NoiseTopology,
    cfg: &McConfig,
) -> Result<CoherenceTrace> {
    require_len(pair, drive.len())?;
    require_topology_len(topology, pair.len())?;
    let plan = plan_bus_full(topology, pair, drive)?;
    run(bath, plan, cfg)
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => pairwise_sum(&values[..n / 2]) + pairwise_sum(&values[n / 2..]),
    }
}

struct GroupSums {
    count: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

fn recorded_indices(cfg: &McConfig) -> Vec<usize> {
    (0..cfg.n_steps).step_by(cfg.record_every).collect()
}

fn run(bath: &OhmicBath, plan: SourcePlan, cfg: &McConfig) -> Result<CoherenceTrace> {
    bath.require_temperature()?;
    cfg.validate(bath)?;
    let synth = if plan.n_sources > 0 {
        Some(NoiseSynthesizer::new(bath, &plan.topology, plan.n_sources, cfg.dt, cfg.n_steps)?)
    } else {
        None
    };
    let record = recorded_indices(cfg);
    let n_traj = cfg.n_trajectories;
    let n_groups = JACKKNIFE_GROUPS.min(n_traj);

    let groups: Vec<GroupSums> = (0..n_groups)
        .into_par_iter()
        .map(|g| run_group(g, n_groups, synth.as_ref(), &plan.model, &record, cfg))
        .collect();

    let n_rec = record.len();
    let mut mean = Vec::with_capacity(n_rec);
    let mut replicates = vec![Vec::with_capacity(n_rec); n_groups];
    let mut stderr = Vec::with_capacity(n_rec);
    let mut column_re = vec![0.0; n_groups];
    let mut column_im = vec![0.0; n_groups];
    let gf = n_groups as f64;
    for p in 0..n_rec {
        for (g, sums) in groups.iter().enumerate() {
            column_re[g] = sums.re[p];
            column_im[g] = sums.im[p];
        }
        let total = Complex64::new(pairwise_sum(&column_re), pairwise_sum(&column_im));
        mean.push(total / n_traj as f64);
        let mut abs_loo = Vec::with_capacity(n_groups);
        for (g, sums) in groups.iter().enumerate() {
            let rest = n_traj - sums.count;
            let loo = if rest > 0 {
                (total - Complex64::new(sums.re[p], sums.im[p])) / rest as f64
            } else {
                total / n_traj as f64
            };
            abs_loo.push(loo.norm());
            replicates[g].push(loo);
        }
        let abs_mean = abs_loo.iter().sum::<f64>() / gf;
        let var = abs_loo.iter().map(|a| (a - abs_mean).powi(2)).sum::<f64>() * (gf - 1.0) / gf;
        stderr.push(var.sqrt());
    }

    Ok(CoherenceTrace {
        times: record.iter().map(|&n| n as f64 * cfg.dt).collect(),
        abs_coherence: mean.iter().map(|c| c.norm()).collect(),
        arg_coherence: unwrap_phase(mean.iter().map(|c| c.arg())),
        stderr,
        n_samples: n_traj,
        replicates,
    })
}

fn run_group(
    g: usize,
    n_groups: usize,
    synth: Option<&NoiseSynthesizer>,
    model: &GapModel,
    record: &[usize],
    cfg: &McConfig,
) -> GroupSums {
    let n_traj = cfg.n_trajectories;
    let start = g * n_traj / n_groups;
    let end = (g + 1) * n_traj / n_groups;
    let mut re = vec![CompensatedSum::default(); record.len()];
    let mut im = vec![CompensatedSum::default(); record.len()];

    let Some(synth) = synth else {
        // No source couples to this pair: the phase vanishes identically.
        for (r, i) in re.iter_mut().zip(&mut im) {
            for _ in start..end {
                r.add(1.0);
                i.add(0.0);
            }
        }
        return GroupSums {
            count: end - start,
            re: re.into_iter().map(CompensatedSum::value).collect(),
            im: im.into_iter().map(CompensatedSum::value).collect(),
        };
    };

    let mut scratch = Scratch::new(synth);
    let mut series = vec![vec![0.0; cfg.n_steps]; synth.n_series()];
    let half_dt = 0.5 * cfg.dt;
    for traj in start..end {
        let mut rng = stream_rng(cfg.master_seed, traj as u64);
        synth.fill(&mut rng, &mut series, &mut scratch);
        let mut phase = 0.0;
        let mut prev = model.gap(&series, 0);
        let mut next_record = 0;
        for n in 0..cfg.n_steps {
            if n > 0 {
                let cur = model.gap(&series, n);
                phase += half_dt * (prev + cur);
                prev = cur;
            }
            if next_record < record.len() && record[next_record] == n {
                let (s, c) = phase.sin_cos();
                re[next_record].add(c);
                im[next_record].add(-s);
                next_record += 1;
            }
        }
    }
    GroupSums {
        count: end - start,
        re: re.into_iter().map(CompensatedSum::value).collect(),
        im: im.into_iter().map(CompensatedSum::value).collect(),
    }
}

pub(crate) fn unwrap_phase(phases: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut out: Vec<f64> = Vec::new();
    for p in phases {
        let unwrapped = match out.last() {
            Some(&last) => {
                let mut d = p - last;
                d -= two_pi * (d / two_pi).round();
                last + d
            }
            None => p,
        };
        out.push(unwrapped);
    }
    out
}
