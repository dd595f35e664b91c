use gcn_core::couplings::classical_correlator_quadrature;
use gcn_core::noise::{
    classical_psd, NoiseSynthesizer, NoiseTopology, OhmicBath, Geometry, PsdAverager, PsdEstimator,
};

fn bath(omega_c: f64) -> OhmicBath {
    OhmicBath::new(0.2, omega_c, 1.5, Geometry::OneD, 1.0).unwrap()
}

#[test]
fn auto_psd_matches_target_in_band() {
    let b = bath(2.0);
    let n = 256;
    let dt = 0.25;
    let synth = NoiseSynthesizer::new(&b, &NoiseTopology::Uniform, 1, dt, n).unwrap();
    let est = PsdEstimator::new(n, dt).unwrap();
    let mut avg = PsdAverager::new(&est);
    for stream in 0..1000 {
        avg.add(&est.periodogram(synth.bundle(17, stream).trajectory(0)).unwrap());
    }
    let psd = avg.finish();
    assert_eq!(psd.n_averages, 1000);
    let mut checked = 0;
    for ((w, s), e) in psd.omega.iter().zip(&psd.psd).zip(&psd.stderr) {
        if *w < b.cutoff() / 10.0 || *w > b.cutoff() {
            continue;
        }
        let target = classical_psd(&b, *w).unwrap();
        assert!((s / target - 1.0).abs() < 0.10, "omega {w}: {s} vs {target} (± {e})");
        checked += 1;
    }
    assert!(checked >= 15);
}

#[test]
fn coincident_sites_have_cross_equal_to_auto() {
    let b = bath(2.0);
    let n = 256;
    let dt = 0.25;
    let topology = NoiseTopology::Spatial { positions: vec![0.3, 0.3] };
    let synth = NoiseSynthesizer::new(&b, &topology, 2, dt, n).unwrap();
    let est = PsdEstimator::new(n, dt).unwrap();
    let mut auto = PsdAverager::new(&est);
    let mut cross = PsdAverager::new(&est);
    for stream in 0..200 {
        let bundle = synth.bundle(3, stream);
        auto.add(&est.periodogram(bundle.trajectory(0)).unwrap());
        cross.add(&est.cross_periodogram(bundle.trajectory(0), bundle.trajectory(1)).unwrap());
    }
    let (a, c) = (auto.finish(), cross.finish());
    for ((x, y), e) in a.psd.iter().zip(&c.psd).zip(&a.stderr) {
        assert!((x - y).abs() <= 3.0 * e + 1e-12 * x.abs());
    }
}

#[test]
fn independent_sources_are_uncorrelated() {
    let b = bath(1.0);
    let synth = NoiseSynthesizer::new(&b, &NoiseTopology::Independent, 2, 0.5, 256).unwrap();
    let n_bundles = 10_000;
    let mut products = Vec::with_capacity(n_bundles);
    for stream in 0..n_bundles as u64 {
        let bundle = synth.bundle(8, stream);
        let (x, y) = (bundle.trajectory(0), bundle.trajectory(1));
        products.push(x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / x.len() as f64);
    }
    let n = products.len() as f64;
    let mean = products.iter().sum::<f64>() / n;
    let var = products.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let z = mean / (var / n).sqrt();
    assert!(z.abs() < 5.0, "z = {z}");
}

#[test]
fn spatial_covariance_matches_correlator() {
    // Equal-time covariance of two sites at distance r against the continuum
    // correlator; the grid truncates at Nyquist, so allow 2% plus noise.
    let b = bath(1.0);
    let r = 0.8;
    let topology = NoiseTopology::Spatial { positions: vec![0.0, r] };
    let synth = NoiseSynthesizer::new(&b, &topology, 2, 0.25, 1024).unwrap();
    let n_bundles = 4000;
    let mut products = Vec::with_capacity(n_bundles);
    for stream in 0..n_bundles as u64 {
        let bundle = synth.bundle(12, stream);
        let (x, y) = (bundle.trajectory(0), bundle.trajectory(1));
        products.push(x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / x.len() as f64);
    }
    let n = products.len() as f64;
    let mean = products.iter().sum::<f64>() / n;
    let se = (products.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    let expected = classical_correlator_quadrature(&b, r).unwrap().value;
    assert!(
        (mean - expected).abs() <= 3.0 * se + 0.02 * expected.abs(),
        "{mean} ± {se} vs {expected}"
    );
}
