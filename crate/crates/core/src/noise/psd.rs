//! Averaged-periodogram estimates of auto- and cross-spectra.
//!
//! Estimates use the same two-sided convention as [`super::classical_psd`]:
//! for a sample `x_n` the bin-`k` periodogram is `dt / N · |X_k|²`, tabulated
//! for `0 ≤ ω_k ≤ π / dt`.

use std::io::{self, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{GcnError, Result};

/// Shortest segment accepted by the estimators.
pub const MIN_SEGMENT: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct PsdEstimate {
    pub omega: Vec<f64>,
    pub psd: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_averages: usize,
}

/// One row of a tabulated PSD comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsdRow {
    pub omega: f64,
    pub s_target: f64,
    pub s_estimated: f64,
    pub stderr: f64,
}

/// Periodograms of fixed-length segments.
pub struct PsdEstimator {
    len: usize,
    dt: f64,
    fft: Arc<dyn Fft<f64>>,
}

impl PsdEstimator {
    pub fn new(len: usize, dt: f64) -> Result<Self> {
        if len < MIN_SEGMENT {
            return Err(GcnError::InvalidGrid(format!(
                "trajectory too short: {len} samples, need at least {MIN_SEGMENT}"
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(GcnError::InvalidGrid(format!("dt must be > 0, got {dt}")));
        }
        Ok(Self {
            len,
            dt,
            fft: FftPlanner::new().plan_fft_forward(len),
        })
    }

    pub fn n_bins(&self) -> usize {
        self.len / 2 + 1
    }

    pub fn omega(&self) -> Vec<f64> {
        let d = 2.0 * std::f64::consts::PI / (self.len as f64 * self.dt);
        (0..self.n_bins()).map(|k| k as f64 * d).collect()
    }

    fn transform(&self, x: &[f64], y: Option<&[f64]>) -> Result<Vec<Complex64>> {
        for s in std::iter::once(x).chain(y) {
            if s.len() != self.len {
                return Err(GcnError::LengthMismatch {
                    what: "segment",
                    got: s.len(),
                    expected: self.len,
                });
            }
        }
        let mut buf: Vec<Complex64> = match y {
            Some(y) => x.iter().zip(y).map(|(&a, &b)| Complex64::new(a, b)).collect(),
            None => x.iter().map(|&a| Complex64::new(a, 0.0)).collect(),
        };
        self.fft.process(&mut buf);
        Ok(buf)
    }

    pub fn periodogram(&self, x: &[f64]) -> Result<Vec<f64>> {
        let spec = self.transform(x, None)?;
        let scale = self.dt / self.len as f64;
        Ok(spec[..self.n_bins()].iter().map(|c| c.norm_sqr() * scale).collect())
    }

    /// Real part of the cross periodogram `dt / N · X_k conj(Y_k)`.
    pub fn cross_periodogram(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        // Z = X + iY, so X_k = (Z_k + conj Z_{N-k}) / 2 and Y_k = (Z_k - conj Z_{N-k}) / 2i.
        let z = self.transform(x, Some(y))?;
        let n = self.len;
        let scale = self.dt / n as f64;
        Ok((0..self.n_bins())
            .map(|k| {
                let zk = z[k];
                let zm = z[(n - k) % n].conj();
                let xk = (zk + zm) * 0.5;
                let yk = (zk - zm) * Complex64::new(0.0, -0.5);
                (xk * yk.conj()).re * scale
            })
            .collect())
    }
}

/// Running mean and spread of periodograms.
#[derive(Clone, Debug)]
pub struct PsdAverager {
    omega: Vec<f64>,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    count: usize,
}

impl PsdAverager {
    pub fn new(estimator: &PsdEstimator) -> Self {
        let n = estimator.n_bins();
        Self {
            omega: estimator.omega(),
            sum: vec![0.0; n],
            sum_sq: vec![0.0; n],
            count: 0,
        }
    }

    pub fn add(&mut self, periodogram: &[f64]) {
        for ((s, q), &p) in self.sum.iter_mut().zip(&mut self.sum_sq).zip(periodogram) {
            *s += p;
            *q += p * p;
        }
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(&self) -> PsdEstimate {
        let n = self.count.max(1) as f64;
        let psd: Vec<f64> = self.sum.iter().map(|s| s / n).collect();
        let stderr = psd
            .iter()
            .zip(&self.sum_sq)
            .map(|(&mean, &q)| {
                if self.count >= 2 {
                    ((q / n - mean * mean).max(0.0) * n / (n - 1.0) / n).sqrt()
                } else {
                    // A single periodogram bin is exponential: std = mean.
                    mean.abs()
                }
            })
            .collect();
        PsdEstimate {
            omega: self.omega.clone(),
            psd,
            stderr,
            n_averages: self.count,
        }
    }
}

/// Bartlett estimate: average of periodograms over non-overlapping segments of
/// `segment_len` samples.
pub fn estimate_psd(trajectory: &[f64], dt: f64, segment_len: usize) -> Result<PsdEstimate> {
    let estimator = PsdEstimator::new(segment_len, dt)?;
    if trajectory.len() < segment_len {
        return Err(GcnError::InvalidGrid(format!(
            "trajectory too short: {} samples for segments of {segment_len}",
            trajectory.len()
        )));
    }
    let mut avg = PsdAverager::new(&estimator);
    for segment in trajectory.chunks_exact(segment_len) {
        avg.add(&estimator.periodogram(segment)?);
    }
    Ok(avg.finish())
}

/// Pairs an estimate with a target spectrum.
pub fn psd_table<F>(estimate: &PsdEstimate, target: F) -> Result<Vec<PsdRow>>
where
    F: Fn(f64) -> Result<f64>,
{
    estimate
        .omega
        .iter()
        .zip(&estimate.psd)
        .zip(&estimate.stderr)
        .map(|((&omega, &s_estimated), &stderr)| {
            Ok(PsdRow {
                omega,
                s_target: target(omega)?,
                s_estimated,
                stderr,
            })
        })
        .collect()
}

pub fn write_psd_csv<W: Write>(mut out: W, rows: &[PsdRow]) -> io::Result<()> {
    writeln!(out, "omega,S_target,S_estimated,stderr")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.omega, r.s_target, r.s_estimated, r.stderr)?;
    }
    Ok(())
}
