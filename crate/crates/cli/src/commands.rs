use gcn_core::couplings::{
    coupling_matrix, drive_enhancement, spurious_coupling, transient_coupling, CouplingKind,
};
use gcn_core::mcsim::{
    default_suite, fit_rate, simulate_bus_full, validate_against_analytic, McConfig, Scenario, ValidationRecord,
    DEFAULT_CUTOFF_RATIO, DEFAULT_FIT_WINDOW,
};
use gcn_core::noise::{Geometry, NoiseTopology};
use gcn_core::rates::{
    rate_bus, rate_fsa_independent, rate_fsa_uniform, relative_rate, scaling_scan, worst_case_pair,
    ArchitectureKind, ArchitectureModel,
};
use gcn_core::register::{enumerate_unordered_pairs, pointer_bus, pointer_fsa_uniform, CoherencePair};
use gcn_core::GcnError;
use serde_json::{json, Value};

use crate::config::{PairKeyword, PairSelection, ScenarioConfig, DEFAULT_TRAJECTORIES};
use crate::output::{Cell, Report};
use crate::CliError;

/// Result of a command: its report and whether every check passed.
pub struct Outcome {
    pub report: Report,
    pub passed: bool,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Self { report, passed: true }
    }
}

fn architecture(cfg: &ScenarioConfig, kind: ArchitectureKind, len: usize) -> Result<ArchitectureModel, CliError> {
    let drive = cfg.drive()?;
    if kind == ArchitectureKind::Bus && drive.is_none() {
        return Err(CliError::Missing("drive"));
    }
    Ok(ArchitectureModel::new(kind, len, drive)?)
}

fn report(command: &'static str, cfg: &ScenarioConfig, columns: &[&'static str]) -> Report {
    let mut r = Report::new(command, cfg.seed.unwrap_or_default(), resolved(cfg), columns);
    for (k, v) in cfg.units.clone().unwrap_or_default().describe() {
        r.note(k, v);
    }
    r
}

/// The config as embedded in output headers: everything that affects the
/// numbers, without the destination path.
pub fn resolved(cfg: &ScenarioConfig) -> Value {
    let mut c = cfg.clone();
    c.output = None;
    serde_json::to_value(c).expect("config serializes")
}

pub fn rates(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let kind = cfg.architecture()?;
    let arch = architecture(cfg, kind, cfg.register_len()?)?;
    let noise = cfg.noise_for(kind);
    let bath = cfg.bath(None)?;
    let s0 = bath.zero_frequency_psd()?;
    let pairs: Vec<CoherencePair> = match cfg.pairs.clone().unwrap_or(PairSelection::Keyword(PairKeyword::All)) {
        PairSelection::Keyword(PairKeyword::All) => enumerate_unordered_pairs(arch.n_qubits())?,
        PairSelection::Keyword(PairKeyword::WorstCase) => vec![worst_case_pair(&arch, noise)?],
        PairSelection::Explicit(list) => list.iter().map(|p| p.to_pair()).collect::<Result<_, _>>()?,
    };

    let mut r = report(
        "rates",
        cfg,
        &["architecture", "L", "M", "Mp", "Nd", "Q", "Qp", "gamma", "m_label", "mp_label"],
    );
    r.note("noise", noise.name());
    r.note("S0", s0);
    for pair in pairs {
        let rel = relative_rate(&arch, noise, &pair)?;
        let (q, qp, gamma) = match kind {
            ArchitectureKind::FsaUniform => (
                Some(pointer_fsa_uniform(pair.left())),
                Some(pointer_fsa_uniform(pair.right())),
                rate_fsa_uniform(&bath, &pair)?.gamma,
            ),
            ArchitectureKind::FsaIndependent => (None, None, rate_fsa_independent(&bath, &pair)?.gamma),
            ArchitectureKind::Bus => {
                let drive = arch.drive().expect("bus has a drive");
                let gamma = match noise {
                    gcn_core::rates::NoiseKind::Central => rate_bus(&bath, &pair, drive)?.gamma,
                    gcn_core::rates::NoiseKind::Independent => 0.5 * s0 * rel,
                };
                (Some(pointer_bus(pair.left(), drive)?), Some(pointer_bus(pair.right(), drive)?), gamma)
            }
            ArchitectureKind::Hypercube | ArchitectureKind::ProcessorCore => (None, None, 0.5 * s0 * rel),
        };
        r.push(vec![
            Cell::Text(kind.name().into()),
            arch.len().into(),
            pair.total_spin_left().into(),
            pair.total_spin_right().into(),
            pair.hamming_distance().into(),
            q.into(),
            qp.into(),
            gamma.into(),
            pair.left().to_string().into(),
            pair.right().to_string().into(),
        ]);
    }
    Ok(r.into())
}

pub fn scan(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let kind = cfg.architecture()?;
    let noise = cfg.noise_for(kind);
    let lens = cfg.len_values.clone().ok_or(CliError::Missing("L_values"))?;
    let table = scaling_scan(kind, noise, &lens)?;
    let mut r = report("scan", cfg, &["L", "relative_rate", "local_exponent"]);
    r.note("architecture", kind.name());
    r.note("noise", noise.name());
    r.note("fitted_exponent", table.fitted_exponent());
    for row in &table.rows {
        r.push(vec![row.len.into(), row.relative_rate.into(), row.local_exponent.into()]);
    }
    Ok(r.into())
}

pub fn couplings(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    // The couplings are zero-temperature quantities; T only enters if given.
    let bath = cfg.bath(Some(0.0))?;
    let positions = cfg.positions()?;
    let n = positions.len();
    let one_d = bath.with_geometry(Geometry::OneD);
    let three_d = bath.with_geometry(Geometry::ThreeD);

    let mut r = report(
        "couplings",
        cfg,
        &["j", "k", "r_jk", "x", "mu_sc", "mu_tr", "mu_tr_1d", "mu_tr_3d", "tr_3d_ge_1d"],
    );
    r.note("geometry", bath.geometry().name());
    r.note("drive_enhancement", drive_enhancement(n, &bath)?);
    r.note("mu_sc_self", spurious_coupling(&bath, 0.0)?);
    r.note("mu_tr_self", transient_coupling(&bath, 0.0)?);
    if n > 0 {
        let sc = coupling_matrix(&bath, &positions, CouplingKind::Spurious)?;
        let tr = coupling_matrix(&bath, &positions, CouplingKind::Transient)?;
        r.note("mu_sc_matrix", json!(sc.rows()));
        r.note("mu_tr_matrix", json!(tr.rows()));
    }
    for j in 0..n {
        for k in j + 1..n {
            let d = (positions[j] - positions[k]).abs();
            let tr1 = transient_coupling(&one_d, d)?;
            let tr3 = transient_coupling(&three_d, d)?;
            r.push(vec![
                j.into(),
                k.into(),
                d.into(),
                bath.reduced_distance(d).into(),
                spurious_coupling(&bath, d)?.into(),
                transient_coupling(&bath, d)?.into(),
                tr1.into(),
                tr3.into(),
                (tr3 >= tr1).into(),
            ]);
        }
    }
    Ok(r.into())
}

struct McSetup {
    scenario: Scenario,
    full_bus: bool,
    /// Rate setting the grid and the fit window units.
    reference: f64,
    config: McConfig,
}

fn mc_setup(cfg: &ScenarioConfig) -> Result<McSetup, CliError> {
    let kind = cfg.architecture()?;
    let pair = cfg.pair.as_ref().ok_or(CliError::Missing("pair"))?.to_pair()?;
    let len = cfg.len.unwrap_or(pair.len());
    let arch = architecture(cfg, kind, len)?;
    let topology = cfg.topology.clone().unwrap_or(match kind {
        ArchitectureKind::FsaIndependent => NoiseTopology::Independent,
        _ => NoiseTopology::Uniform,
    });
    let mc = cfg.mc();
    let full_bus = mc.full_bus.unwrap_or(false);
    if full_bus && kind != ArchitectureKind::Bus {
        return Err(CliError::Constraint("mc.full_bus requires architecture = bus".into()));
    }
    let scenario = Scenario {
        name: format!("{} {}/{}", kind.name(), pair.left(), pair.right()),
        architecture: arch,
        pair,
        bath: cfg.bath(None)?,
        topology,
        n_trajectories: mc.n_trajectories.unwrap_or(DEFAULT_TRAJECTORIES),
        master_seed: cfg.seed.unwrap_or_default(),
        fit_window: mc.fit_window.unwrap_or(DEFAULT_FIT_WINDOW),
    };
    // The quadratic bus Hamiltonian carries the pointer with an extra 1/4.
    let analytic = scenario.analytic_rate()?;
    let rate = if full_bus { analytic / 16.0 } else { analytic };
    let reference = if rate > 0.0 {
        rate
    } else {
        scenario.bath.cutoff() / DEFAULT_CUTOFF_RATIO
    };
    let mut config = match mc.duration {
        Some(d) => {
            let mut c = McConfig::for_duration(&scenario.bath, d, scenario.n_trajectories, scenario.master_seed)?;
            c.fit_window = scenario.fit_window;
            c
        }
        None => scenario.mc_config(rate)?,
    };
    if let Some(every) = mc.record_every {
        config.record_every = every;
    }
    Ok(McSetup {
        scenario,
        full_bus,
        reference,
        config,
    })
}

pub fn mc(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let setup = mc_setup(cfg)?;
    let s = &setup.scenario;
    let trace = if setup.full_bus {
        let drive = s.architecture.drive().expect("bus has a drive");
        simulate_bus_full(drive, &s.pair, &s.bath, &s.topology, &setup.config)?
    } else {
        s.simulate(&setup.config)?
    };
    let window = (
        setup.config.fit_window.0 / setup.reference,
        setup.config.fit_window.1 / setup.reference,
    );

    let mut r = report("mc", cfg, &["t", "abs_C", "arg_C", "stderr"]);
    r.note("scenario", s.name.clone());
    r.note("n_trajectories", setup.config.n_trajectories);
    r.note("dt", setup.config.dt);
    r.note("n_steps", setup.config.n_steps);
    r.note("gamma_reference", setup.reference);
    r.note("fit_window", json!([window.0, window.1]));
    match fit_rate(&trace, window) {
        Ok(fit) => {
            r.note("gamma_hat", fit.gamma);
            r.note("stderr_gamma", fit.stderr);
            r.note("r_squared", fit.r_squared);
        }
        Err(e) => r.note("fit", format!("unavailable: {e}")),
    }
    for i in 0..trace.len() {
        r.push(vec![
            trace.times[i].into(),
            trace.abs_coherence[i].into(),
            trace.arg_coherence[i].into(),
            trace.stderr[i].into(),
        ]);
    }
    Ok(r.into())
}

pub fn validate(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let scenarios = if cfg.architecture.is_some() {
        let setup = mc_setup(cfg)?;
        if setup.full_bus {
            return Err(CliError::Constraint(
                "mc.full_bus has no closed-form rate to validate against".into(),
            ));
        }
        vec![setup.scenario]
    } else {
        let n = cfg.mc().n_trajectories.unwrap_or(DEFAULT_TRAJECTORIES);
        default_suite(n, cfg.seed.unwrap_or_default())?
    };

    let mut r = report(
        "validate",
        cfg,
        &["scenario", "gamma_analytic", "gamma_hat", "stderr", "rel_err", "z", "pass"],
    );
    let mut passed = true;
    for s in &scenarios {
        let rec = match validate_against_analytic(s) {
            Ok(rec) => rec,
            Err(GcnError::Fit(msg)) => {
                r.note(format!("fit_error {}", s.name), msg);
                ValidationRecord {
                    scenario: s.name.clone(),
                    gamma_analytic: s.analytic_rate()?,
                    gamma_hat: f64::NAN,
                    stderr: f64::NAN,
                    rel_err: None,
                    z: f64::NAN,
                    pass: false,
                }
            }
            Err(e) => return Err(e.into()),
        };
        passed &= rec.pass;
        r.push(vec![
            rec.scenario.into(),
            rec.gamma_analytic.into(),
            finite(rec.gamma_hat),
            finite(rec.stderr),
            rec.rel_err.into(),
            finite(rec.z),
            rec.pass.into(),
        ]);
    }
    r.note("all_pass", passed);
    Ok(Outcome { report: r, passed })
}

fn finite(v: f64) -> Cell {
    if v.is_finite() {
        Cell::Float(v)
    } else {
        Cell::Empty
    }
}
