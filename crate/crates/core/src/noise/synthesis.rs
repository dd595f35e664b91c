//! Spectral synthesis of stationary, jointly Gaussian noise with a prescribed
//! cross-spectral matrix.
//!
//! On the grid `ω_k = 2πk / (N dt)` each Fourier mode is drawn independently
//! with covariance `S_jk(ω_k) / (N dt)`, where the matrix is factorised once
//! per frequency. An unnormalised inverse FFT then yields samples whose
//! discrete autocovariance is the Riemann sum of `(1/2π) ∫ S(ω) e^{−iωτ} dω`.
//! The resulting trajectories are periodic in `N dt`.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use super::{classical_psd, propagation_kernel, NoiseTopology, OhmicBath};
use crate::error::{GcnError, Result};

/// Eigenvalues in `[-PSD_CLAMP · λ_max, 0)` are treated as rounding noise.
const PSD_CLAMP: f64 = 1e-10;

/// Largest `dt · ω_c` for which the exponential cutoff is resolved.
pub const MAX_DT_OMEGA_C: f64 = 0.5;

/// Random stream `stream` of the master seed `seed`.
///
/// Streams are ChaCha8 stream ids, so every `(seed, stream)` pair yields an
/// independent sequence no matter in which order streams are consumed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `L` discrete-time noise trajectories on a common grid.
#[derive(Clone, Debug)]
pub struct TrajectoryBundle {
    pub dt: f64,
    pub n_steps: usize,
    pub seed: u64,
    pub stream: u64,
    /// One entry per source. Under a uniform topology all entries point to the
    /// same allocation.
    pub samples: Vec<Arc<[f64]>>,
}

impl TrajectoryBundle {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn trajectory(&self, j: usize) -> &[f64] {
        &self.samples[j]
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_steps).map(move |n| n as f64 * self.dt)
    }
}

#[derive(Debug)]
enum Shape {
    /// One series shared by all sources; amplitude per frequency.
    Shared(Vec<f64>),
    /// Independent series with a common amplitude per frequency.
    Independent(Vec<f64>),
    /// Per-frequency factor `F_k` with `F_k F_kᵀ = S_k / (N dt)`.
    Correlated(Vec<DMatrix<f64>>),
}

/// Precomputed synthesis plan for one `(bath, topology, grid)` combination.
pub struct NoiseSynthesizer {
    dt: f64,
    n_steps: usize,
    n_sources: usize,
    shape: Shape,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for NoiseSynthesizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NoiseSynthesizer")
            .field("dt", &self.dt)
            .field("n_steps", &self.n_steps)
            .field("n_sources", &self.n_sources)
            .finish_non_exhaustive()
    }
}

pub(crate) fn validate_grid(bath: &OhmicBath, dt: f64, n_steps: usize) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(GcnError::InvalidGrid(format!("dt must be > 0, got {dt}")));
    }
    if n_steps < 2 || !n_steps.is_power_of_two() {
        return Err(GcnError::InvalidGrid(format!(
            "n_steps must be a power of two >= 2, got {n_steps}"
        )));
    }
    if dt * bath.cutoff() > MAX_DT_OMEGA_C * (1.0 + 1e-12) {
        return Err(GcnError::InvalidGrid(format!(
            "dt * omega_c = {} exceeds {MAX_DT_OMEGA_C}",
            dt * bath.cutoff()
        )));
    }
    Ok(())
}

impl NoiseSynthesizer {
    pub fn new(
        bath: &OhmicBath,
        topology: &NoiseTopology,
        n_sources: usize,
        dt: f64,
        n_steps: usize,
    ) -> Result<Self> {
        bath.require_temperature()?;
        validate_grid(bath, dt, n_steps)?;
        topology.validate(n_sources)?;

        let d_omega = 2.0 * std::f64::consts::PI / (n_steps as f64 * dt);
        let norm = 1.0 / (n_steps as f64 * dt);
        let n_freq = n_steps / 2 + 1;
        let mut amplitude = Vec::with_capacity(n_freq);
        for k in 0..n_freq {
            amplitude.push((classical_psd(bath, k as f64 * d_omega)? * norm).sqrt());
        }

        let shape = match topology {
            NoiseTopology::Uniform => Shape::Shared(amplitude),
            NoiseTopology::Independent => Shape::Independent(amplitude),
            NoiseTopology::Spatial { positions } => {
                let mut factors = Vec::with_capacity(n_freq);
                for (k, amp) in amplitude.iter().enumerate() {
                    let omega = k as f64 * d_omega;
                    let kernel = DMatrix::from_fn(n_sources, n_sources, |j, l| {
                        let r = (positions[j] - positions[l]).abs();
                        propagation_kernel(omega * r / bath.velocity(), bath.geometry())
                    });
                    factors.push(psd_factor(kernel, omega)? * *amp);
                }
                Shape::Correlated(factors)
            }
        };

        let fft = FftPlanner::new().plan_fft_inverse(n_steps);
        Ok(Self {
            dt,
            n_steps,
            n_sources,
            shape,
            fft,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_sources(&self) -> usize {
        self.n_sources
    }

    /// Number of distinct series produced per bundle.
    pub fn n_series(&self) -> usize {
        match self.shape {
            Shape::Shared(_) => 1,
            _ => self.n_sources,
        }
    }

    /// Series that feeds source `s`.
    pub fn series_of(&self, s: usize) -> usize {
        match self.shape {
            Shape::Shared(_) => 0,
            _ => s,
        }
    }

    pub fn bundle(&self, seed: u64, stream: u64) -> TrajectoryBundle {
        let mut rng = stream_rng(seed, stream);
        let mut series = vec![vec![0.0; self.n_steps]; self.n_series()];
        let mut scratch = Scratch::new(self);
        self.fill(&mut rng, &mut series, &mut scratch);
        let series: Vec<Arc<[f64]>> = series.into_iter().map(Arc::from).collect();
        let samples = (0..self.n_sources)
            .map(|s| Arc::clone(&series[self.series_of(s)]))
            .collect();
        TrajectoryBundle {
            dt: self.dt,
            n_steps: self.n_steps,
            seed,
            stream,
            samples,
        }
    }

    /// Writes `n_series()` trajectories into `out`.
    pub(crate) fn fill<R: Rng>(&self, rng: &mut R, out: &mut [Vec<f64>], scratch: &mut Scratch) {
        debug_assert_eq!(out.len(), self.n_series());
        let n_freq = self.n_steps / 2 + 1;
        let spectra = &mut scratch.spectra;
        match &self.shape {
            Shape::Shared(amp) | Shape::Independent(amp) => {
                for spectrum in spectra.iter_mut().take(out.len()) {
                    for (k, a) in amp.iter().enumerate() {
                        spectrum[k] = *a * draw_mode(rng, k, self.n_steps);
                    }
                }
            }
            Shape::Correlated(factors) => {
                let z = &mut scratch.modes;
                for (k, factor) in factors.iter().enumerate() {
                    for zj in z.iter_mut() {
                        *zj = draw_mode(rng, k, self.n_steps);
                    }
                    for (j, spectrum) in spectra.iter_mut().enumerate() {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for (l, zl) in z.iter().enumerate() {
                            acc += factor[(j, l)] * zl;
                        }
                        spectrum[k] = acc;
                    }
                }
            }
        }

        // Two real series share one complex inverse transform.
        let n = self.n_steps;
        let buf = &mut scratch.buffer;
        for (chunk_idx, chunk) in out.chunks_mut(2).enumerate() {
            let x = &spectra[2 * chunk_idx];
            let y = if chunk.len() == 2 {
                Some(&spectra[2 * chunk_idx + 1])
            } else {
                None
            };
            let i = Complex64::new(0.0, 1.0);
            for k in 0..n_freq {
                let yk = y.map_or(Complex64::new(0.0, 0.0), |y| y[k]);
                buf[k] = x[k] + i * yk;
                if k > 0 && k < n - k {
                    buf[n - k] = x[k].conj() + i * yk.conj();
                }
            }
            self.fft.process_with_scratch(buf, &mut scratch.fft_scratch);
            for (t, v) in buf.iter().enumerate() {
                chunk[0][t] = v.re;
            }
            if chunk.len() == 2 {
                for (t, v) in buf.iter().enumerate() {
                    chunk[1][t] = v.im;
                }
            }
        }
    }
}

/// Reusable buffers for [`NoiseSynthesizer::fill`].
pub(crate) struct Scratch {
    spectra: Vec<Vec<Complex64>>,
    modes: Vec<Complex64>,
    buffer: Vec<Complex64>,
    fft_scratch: Vec<Complex64>,
}

impl Scratch {
    pub(crate) fn new(synth: &NoiseSynthesizer) -> Self {
        let n_freq = synth.n_steps / 2 + 1;
        Self {
            spectra: vec![vec![Complex64::new(0.0, 0.0); n_freq]; synth.n_series()],
            modes: vec![Complex64::new(0.0, 0.0); synth.n_sources],
            buffer: vec![Complex64::new(0.0, 0.0); synth.n_steps],
            fft_scratch: vec![Complex64::new(0.0, 0.0); synth.fft.get_inplace_scratch_len()],
        }
    }
}

/// Unit-variance mode amplitude: real at `k = 0` and at Nyquist, circular
/// complex otherwise.
fn draw_mode<R: Rng>(rng: &mut R, k: usize, n: usize) -> Complex64 {
    if k == 0 || 2 * k == n {
        Complex64::new(rng.sample(StandardNormal), 0.0)
    } else {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }
}

/// `U √Λ` for a symmetric positive semidefinite kernel matrix.
fn psd_factor(kernel: DMatrix<f64>, omega: f64) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(kernel);
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let mut factor = eig.eigenvectors;
    for (col, &lambda) in eig.eigenvalues.iter().enumerate() {
        let lambda = if lambda >= 0.0 {
            lambda
        } else if lambda >= -PSD_CLAMP * max {
            0.0
        } else {
            return Err(GcnError::CovarianceNotPsd {
                omega,
                eigenvalue: lambda,
            });
        };
        factor.column_mut(col).scale_mut(lambda.sqrt());
    }
    Ok(factor)
}

/// One bundle of `n_sites` trajectories from stream 0 of `seed`.
pub fn synthesize_trajectories(
    bath: &OhmicBath,
    topology: &NoiseTopology,
    n_sites: usize,
    dt: f64,
    n_steps: usize,
    seed: u64,
) -> Result<TrajectoryBundle> {
    Ok(NoiseSynthesizer::new(bath, topology, n_sites, dt, n_steps)?.bundle(seed, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::Geometry;

    fn bath() -> OhmicBath {
        OhmicBath::new(1.0, 1.0, 1.0, Geometry::OneD, 1.0).unwrap()
    }

    #[test]
    fn grid_guards() {
        let b = bath();
        let t = NoiseTopology::Uniform;
        assert!(synthesize_trajectories(&b, &t, 1, 0.5, 256, 1).is_ok());
        assert!(matches!(
            synthesize_trajectories(&b, &t, 1, 0.6, 256, 1),
            Err(GcnError::InvalidGrid(_))
        ));
        assert!(matches!(
            synthesize_trajectories(&b, &t, 1, 0.5, 300, 1),
            Err(GcnError::InvalidGrid(_))
        ));
        assert!(synthesize_trajectories(&b, &t, 1, 0.0, 256, 1).is_err());
        let cold = b.with_temperature(0.0).unwrap();
        assert!(synthesize_trajectories(&cold, &t, 1, 0.5, 256, 1).is_err());
        let spatial = NoiseTopology::Spatial {
            positions: vec![0.0, 1.0],
        };
        assert!(matches!(
            synthesize_trajectories(&b, &spatial, 3, 0.5, 256, 1),
            Err(GcnError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn uniform_sources_share_one_trajectory() {
        let bundle = synthesize_trajectories(&bath(), &NoiseTopology::Uniform, 3, 0.5, 256, 9).unwrap();
        assert_eq!(bundle.len(), 3);
        assert_eq!(bundle.trajectory(0), bundle.trajectory(1));
        assert_eq!(bundle.trajectory(0), bundle.trajectory(2));
        assert!(Arc::ptr_eq(&bundle.samples[0], &bundle.samples[2]));
        assert!(bundle.trajectory(0).iter().any(|&x| x != 0.0));
    }

    #[test]
    fn synthesis_is_reproducible() {
        let topo = NoiseTopology::chain(3, 0.7);
        let a = synthesize_trajectories(&bath(), &topo, 3, 0.25, 512, 42).unwrap();
        let b = synthesize_trajectories(&bath(), &topo, 3, 0.25, 512, 42).unwrap();
        let c = synthesize_trajectories(&bath(), &topo, 3, 0.25, 512, 43).unwrap();
        for j in 0..3 {
            assert_eq!(a.trajectory(j), b.trajectory(j));
            assert_ne!(a.trajectory(j), c.trajectory(j));
        }
    }

    #[test]
    fn coincident_sites_are_identical() {
        let topo = NoiseTopology::Spatial {
            positions: vec![2.0, 2.0],
        };
        let bundle = synthesize_trajectories(&bath(), &topo, 2, 0.5, 256, 3).unwrap();
        for (x, y) in bundle.trajectory(0).iter().zip(bundle.trajectory(1)) {
            assert!((x - y).abs() < 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn variance_matches_discrete_spectrum_sum() {
        // Var x_n = Σ_k S(ω_k) / (N dt) over the full two-sided grid.
        let b = bath();
        let (dt, n) = (0.25, 256);
        let synth = NoiseSynthesizer::new(&b, &NoiseTopology::Independent, 4, dt, n).unwrap();
        let d_omega = 2.0 * std::f64::consts::PI / (n as f64 * dt);
        let expected: f64 = (0..n)
            .map(|k| {
                let kk = if k <= n / 2 { k } else { n - k };
                classical_psd(&b, kk as f64 * d_omega).unwrap()
            })
            .sum::<f64>()
            / (n as f64 * dt);
        let mut sum_sq = 0.0;
        let mut count = 0.0;
        for stream in 0..400 {
            let bundle = synthesis_bundle(&synth, stream);
            for j in 0..4 {
                for x in bundle.trajectory(j) {
                    sum_sq += x * x;
                    count += 1.0;
                }
            }
        }
        let var = sum_sq / count;
        assert!((var / expected - 1.0).abs() < 0.03, "var {var} vs {expected}");
    }

    fn synthesis_bundle(s: &NoiseSynthesizer, stream: u64) -> TrajectoryBundle {
        s.bundle(11, stream)
    }

    #[test]
    fn rejects_indefinite_kernel() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(psd_factor(m, 1.0), Err(GcnError::CovarianceNotPsd { .. })));
        let f = psd_factor(DMatrix::from_element(2, 2, 1.0), 0.0).unwrap();
        let back = &f * f.transpose();
        assert!((back - DMatrix::from_element(2, 2, 1.0)).abs().max() < 1e-14);
    }
}
