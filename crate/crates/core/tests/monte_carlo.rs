use gcn_core::couplings::classical_correlator_quadrature;
use gcn_core::mcsim::{
    fit_phase_drift, fit_rate, simulate_bus_full, simulate_dephasing, validate_against_analytic, McConfig, Scenario,
    DEFAULT_FIT_WINDOW,
};
use gcn_core::noise::{classical_cross_psd, Geometry, NoiseTopology, OhmicBath};
use gcn_core::rates::{ArchitectureKind, ArchitectureModel};
use gcn_core::register::{CoherencePair, GateDrive};

fn bath(coupling: f64, omega_c: f64) -> OhmicBath {
    OhmicBath::new(coupling, omega_c, 1.0, Geometry::OneD, 1.0).unwrap()
}

fn pair(a: &str, b: &str) -> CoherencePair {
    CoherencePair::parse(a, b).unwrap()
}

fn fsa_uniform(a: &str, b: &str, omega_c: f64, n: usize, seed: u64) -> Scenario {
    let pair = pair(a, b);
    Scenario {
        name: format!("{a}/{b}"),
        architecture: ArchitectureModel::simple(ArchitectureKind::FsaUniform, pair.len()).unwrap(),
        pair,
        bath: bath(1.0, omega_c),
        topology: NoiseTopology::Uniform,
        n_trajectories: n,
        master_seed: seed,
        fit_window: DEFAULT_FIT_WINDOW,
    }
}

#[test]
fn uniform_three_qubits_matches_sixteen() {
    let s = fsa_uniform("+++", "++-", 3200.0, 10_000, 11);
    let rec = validate_against_analytic(&s).unwrap();
    assert_eq!(rec.gamma_analytic, 16.0);
    assert!(rec.pass, "{rec:?}");
    assert!(rec.rel_err.unwrap().abs() < 0.05);
}

#[test]
fn trace_invariants() {
    let s = fsa_uniform("++", "+-", 800.0, 2000, 3);
    let cfg = s.mc_config(4.0).unwrap();
    let trace = s.simulate(&cfg).unwrap();
    assert_eq!(trace.abs_coherence[0], 1.0);
    assert_eq!(trace.n_samples, 2000);
    for (a, e) in trace.abs_coherence.iter().zip(&trace.stderr) {
        assert!(*a >= 0.0 && *a <= 1.0 + 3.0 * e);
    }
    let fit = fit_rate(&trace, (0.5 / 4.0, 3.0 / 4.0)).unwrap();
    assert!(fit.gamma >= -3.0 * fit.stderr);
}

#[test]
fn negligible_coupling_keeps_coherence() {
    let arch = ArchitectureModel::simple(ArchitectureKind::FsaUniform, 3).unwrap();
    let b = bath(1e-12, 100.0);
    let cfg = McConfig::for_duration(&b, 10.0, 500, 2).unwrap();
    let trace = simulate_dephasing(&arch, &pair("+++", "+--"), &b, &NoiseTopology::Uniform, &cfg).unwrap();
    for (a, e) in trace.abs_coherence.iter().zip(&trace.stderr) {
        assert!((1.0 - a).abs() <= 3.0 * e + 1e-9, "{a} ± {e}");
    }
}

#[test]
fn decoherence_free_pairs_across_seeds() {
    for seed in 0..20 {
        let s = fsa_uniform("++-", "--+", 1000.0, 100, seed);
        let rec = validate_against_analytic(&s).unwrap();
        assert_eq!(rec.gamma_analytic, 0.0);
        assert!(rec.z.abs() <= 3.0 && rec.pass, "{rec:?}");

        for flips in [&[][..], &[0, 1, 2, 3, 4, 5][..]] {
            let up = "++++++".parse::<gcn_core::register::RegisterLabel>().unwrap();
            let p = CoherencePair::new(up.clone(), up.with_flips(flips).unwrap()).unwrap();
            let s = Scenario {
                name: "dfs".into(),
                architecture: ArchitectureModel::simple(ArchitectureKind::FsaIndependent, 6).unwrap(),
                pair: p,
                bath: bath(1.0, 100.0),
                topology: NoiseTopology::Independent,
                n_trajectories: 100,
                master_seed: seed,
                fit_window: DEFAULT_FIT_WINDOW,
            };
            let rec = validate_against_analytic(&s).unwrap();
            assert!(rec.z.abs() <= 3.0 && rec.pass, "{rec:?}");
        }
    }
}

#[test]
fn independent_sources_single_flip() {
    // N_d = 1 at L = 4: Γ = 3/16.
    let up = "++++".parse::<gcn_core::register::RegisterLabel>().unwrap();
    let p = CoherencePair::new(up.clone(), up.with_flips(&[2]).unwrap()).unwrap();
    let s = Scenario {
        name: "nd1".into(),
        architecture: ArchitectureModel::simple(ArchitectureKind::FsaIndependent, 4).unwrap(),
        pair: p,
        bath: bath(1.0, 200.0 * 3.0 / 16.0),
        topology: NoiseTopology::Independent,
        n_trajectories: 10_000,
        master_seed: 9,
        fit_window: DEFAULT_FIT_WINDOW,
    };
    let rec = validate_against_analytic(&s).unwrap();
    assert!((rec.gamma_analytic - 3.0 / 16.0).abs() < 1e-15);
    assert!(rec.pass, "{rec:?}");
}

#[test]
fn stderr_shrinks_with_more_trajectories() {
    let small = fsa_uniform("++", "+-", 800.0, 4096, 21);
    let large = fsa_uniform("++", "+-", 800.0, 8192, 21);
    let median = |s: &Scenario| {
        let cfg = s.mc_config(4.0).unwrap();
        let trace = s.simulate(&cfg).unwrap();
        let mut e: Vec<f64> = trace
            .times
            .iter()
            .zip(&trace.stderr)
            .filter(|(t, _)| **t >= 0.125 && **t <= 0.75)
            .map(|(_, e)| *e)
            .collect();
        e.sort_by(f64::total_cmp);
        e[e.len() / 2]
    };
    let ratio = median(&large) / median(&small);
    assert!((ratio / std::f64::consts::FRAC_1_SQRT_2 - 1.0).abs() < 0.15, "ratio {ratio}");
}

#[test]
fn joint_flip_gives_identical_uniform_trace() {
    let a = fsa_uniform("++-", "+--", 600.0, 500, 4);
    let b = fsa_uniform("--+", "-++", 600.0, 500, 4);
    let cfg = a.mc_config(2.0).unwrap();
    assert_eq!(a.simulate(&cfg).unwrap(), b.simulate(&cfg).unwrap());
}

#[test]
fn thread_count_does_not_change_results() {
    let s = fsa_uniform("+++", "++-", 3200.0, 1000, 77);
    let cfg = s.mc_config(16.0).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| s.simulate(&cfg).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

#[test]
fn seed_changes_trace_but_not_rate() {
    let a = validate_against_analytic(&fsa_uniform("++", "+-", 800.0, 10_000, 1)).unwrap();
    let b = validate_against_analytic(&fsa_uniform("++", "+-", 800.0, 10_000, 2)).unwrap();
    assert_ne!(a.gamma_hat, b.gamma_hat);
    let z = (a.gamma_hat - b.gamma_hat) / (a.stderr.hypot(b.stderr));
    assert!(z.abs() < 3.0, "z = {z}");
}

#[test]
fn idle_bus_with_equal_magnetization_is_silent() {
    let b = bath(0.01, 1.0);
    let cfg = McConfig::for_duration(&b, 200.0, 200, 5).unwrap();
    let drive = GateDrive::idle(3).unwrap();
    let trace = simulate_bus_full(&drive, &pair("++-", "-++"), &b, &NoiseTopology::Uniform, &cfg).unwrap();
    assert!(trace.abs_coherence.iter().all(|&a| a == 1.0));
    assert!(trace.arg_coherence.iter().all(|&p| p == 0.0));
}

/// Equal-time covariance of the synthesized process: the grid sum of the
/// cross spectrum over all FFT frequencies.
fn grid_correlator(b: &OhmicBath, r: f64, dt: f64, n: usize) -> f64 {
    let d_omega = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    (0..n)
        .map(|k| classical_cross_psd(b, k.min(n - k) as f64 * d_omega, r).unwrap())
        .sum::<f64>()
        / (n as f64 * dt)
}

#[test]
fn idle_bus_phase_drift_follows_classical_correlator() {
    // ΔE = (X² − X′²)/8 with X = ξ0 + ξ1, X′ = ξ0 − ξ1, so ⟨ΔE⟩ = ⟨ξ0 ξ1⟩/2
    // and the mean coherence turns at −⟨ξ0 ξ1⟩/2.
    let b = bath(0.01, 1.0);
    let topology = NoiseTopology::Spatial { positions: vec![0.0, 1.0] };
    let cfg = McConfig::for_duration(&b, 1000.0, 10_000, 31).unwrap();
    let grid = grid_correlator(&b, 1.0, cfg.dt, cfg.n_steps);
    let continuum = classical_correlator_quadrature(&b, 1.0).unwrap().value;
    assert!((grid / continuum - 1.0).abs() < 0.02, "grid {grid} vs quadrature {continuum}");

    let drive = GateDrive::idle(2).unwrap();
    let mut slopes = Vec::new();
    for seed in [31, 32, 33] {
        let cfg = McConfig { master_seed: seed, ..cfg.clone() };
        let trace = simulate_bus_full(&drive, &pair("++", "+-"), &b, &topology, &cfg).unwrap();
        let d = fit_phase_drift(&trace, (0.0, cfg.duration())).unwrap();
        let z = (d.slope + grid / 2.0) / d.stderr;
        assert!(z.abs() < 3.0, "slope {} ± {} vs {}", d.slope, d.stderr, -grid / 2.0);
        slopes.push(d);
    }
    let z = (slopes[0].slope - slopes[1].slope) / slopes[0].stderr.hypot(slopes[1].stderr);
    assert!(z.abs() < 3.0);
}
