use serde::Serialize;

use super::{unwrap_phase, CoherenceTrace};
use crate::error::{GcnError, Result};

/// Fewest trace points a fit accepts.
pub const MIN_FIT_POINTS: usize = 10;
/// Points with `|C|` below this many standard errors are dropped.
pub const SIGNAL_FLOOR: f64 = 5.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateEstimate {
    pub gamma: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
    pub t_min: f64,
    pub t_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftEstimate {
    /// Slope of the unwrapped phase of the mean coherence.
    pub slope: f64,
    pub stderr: f64,
    pub n_points: usize,
}

struct Line {
    slope: f64,
    intercept: f64,
    slope_var: f64,
    r_squared: f64,
}

fn weighted_line(t: &[f64], y: &[f64], w: &[f64]) -> Line {
    let sw: f64 = w.iter().sum();
    let mt = t.iter().zip(w).map(|(t, w)| t * w).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(y, w)| y * w).sum::<f64>() / sw;
    let mut stt = 0.0;
    let mut sty = 0.0;
    let mut syy = 0.0;
    for ((t, y), w) in t.iter().zip(y).zip(w) {
        stt += w * (t - mt) * (t - mt);
        sty += w * (t - mt) * (y - my);
        syy += w * (y - my) * (y - my);
    }
    let slope = sty / stt;
    let r_squared = if syy > 0.0 { sty * sty / (stt * syy) } else { 1.0 };
    Line {
        slope,
        intercept: my - slope * mt,
        slope_var: 1.0 / stt,
        r_squared,
    }
}

fn jackknife(estimates: &[f64]) -> f64 {
    let g = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / g;
    (estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() * (g - 1.0) / g).sqrt()
}

fn window_indices(trace: &CoherenceTrace, window: (f64, f64)) -> Result<Vec<usize>> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(GcnError::Fit(format!("empty fit window ({lo}, {hi})")));
    }
    Ok((0..trace.len())
        .filter(|&i| trace.times[i] >= lo && trace.times[i] <= hi)
        .collect())
}

/// Weighted least-squares fit of `ln|C(t)| = a − Γ t` inside `window`.
///
/// Weights are `(|C| / stderr)²`; points whose coherence is not resolved from
/// zero are dropped. With replicates the error bar is the jackknife spread of
/// the refitted slope, otherwise the formal weighted-fit error.
pub fn fit_rate(trace: &CoherenceTrace, window: (f64, f64)) -> Result<RateEstimate> {
    let idx: Vec<usize> = window_indices(trace, window)?
        .into_iter()
        .filter(|&i| {
            let a = trace.abs_coherence[i];
            a > 0.0 && a > SIGNAL_FLOOR * trace.stderr[i]
        })
        .collect();
    if idx.len() < MIN_FIT_POINTS {
        return Err(GcnError::Fit(format!(
            "{} usable points in window ({}, {}), need {MIN_FIT_POINTS}",
            idx.len(),
            window.0,
            window.1
        )));
    }
    let t: Vec<f64> = idx.iter().map(|&i| trace.times[i]).collect();
    let y: Vec<f64> = idx.iter().map(|&i| trace.abs_coherence[i].ln()).collect();
    let sigma: Vec<f64> = idx.iter().map(|&i| trace.stderr[i] / trace.abs_coherence[i]).collect();
    let floor = sigma.iter().cloned().filter(|&s| s > 0.0).fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = if floor.is_finite() {
        sigma.iter().map(|&s| 1.0 / s.max(floor).powi(2)).collect()
    } else {
        vec![1.0; idx.len()]
    };
    let line = weighted_line(&t, &y, &w);

    let stderr = if trace.replicates.len() >= 2 {
        let slopes: Vec<f64> = trace
            .replicates
            .iter()
            .map(|rep| {
                let yr: Vec<f64> = idx.iter().map(|&i| rep[i].norm().max(f64::MIN_POSITIVE).ln()).collect();
                weighted_line(&t, &yr, &w).slope
            })
            .collect();
        jackknife(&slopes)
    } else if floor.is_finite() {
        line.slope_var.sqrt()
    } else {
        0.0
    };

    Ok(RateEstimate {
        gamma: 0.0 - line.slope,
        stderr,
        intercept: line.intercept,
        r_squared: line.r_squared,
        n_points: idx.len(),
        t_min: t[0],
        t_max: t[t.len() - 1],
    })
}

/// Least-squares slope of the unwrapped coherence phase inside `window`.
pub fn fit_phase_drift(trace: &CoherenceTrace, window: (f64, f64)) -> Result<DriftEstimate> {
    let idx = window_indices(trace, window)?;
    if idx.len() < MIN_FIT_POINTS {
        return Err(GcnError::Fit(format!(
            "{} points in window ({}, {}), need {MIN_FIT_POINTS}",
            idx.len(),
            window.0,
            window.1
        )));
    }
    let t: Vec<f64> = idx.iter().map(|&i| trace.times[i]).collect();
    let y: Vec<f64> = idx.iter().map(|&i| trace.arg_coherence[i]).collect();
    let w = vec![1.0; idx.len()];
    let line = weighted_line(&t, &y, &w);
    let stderr = if trace.replicates.len() >= 2 {
        let slopes: Vec<f64> = trace
            .replicates
            .iter()
            .map(|rep| {
                let yr = unwrap_phase(rep.iter().map(|c| c.arg()));
                let yr: Vec<f64> = idx.iter().map(|&i| yr[i]).collect();
                weighted_line(&t, &yr, &w).slope
            })
            .collect();
        jackknife(&slopes)
    } else {
        0.0
    };
    Ok(DriftEstimate {
        slope: line.slope,
        stderr,
        n_points: idx.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exponential(gamma: f64, n: usize) -> CoherenceTrace {
        let times: Vec<f64> = (0..n).map(|i| i as f64 * 0.01).collect();
        let abs = times.iter().map(|t| (-gamma * t).exp()).collect();
        CoherenceTrace::from_values(times, abs, vec![0.0; n]).unwrap()
    }

    #[test]
    fn exact_exponential_is_recovered() {
        let fit = fit_rate(&exponential(2.5, 400), (0.2, 3.0)).unwrap();
        assert!((fit.gamma - 2.5).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-12);
        assert_eq!(fit.stderr, 0.0);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_trace_has_zero_rate() {
        let fit = fit_rate(&exponential(0.0, 400), (0.5, 3.0)).unwrap();
        assert_eq!(fit.gamma, 0.0);
        assert_eq!(fit.stderr, 0.0);
    }

    #[test]
    fn too_few_points_fail() {
        assert!(matches!(fit_rate(&exponential(1.0, 400), (0.0, 0.05)), Err(GcnError::Fit(_))));
        assert!(fit_rate(&exponential(1.0, 400), (1.0, 0.5)).is_err());
    }

    #[test]
    fn weights_follow_relative_error() {
        // One wildly off point with a huge error bar barely moves the fit.
        let mut trace = exponential(1.0, 200);
        for s in trace.stderr.iter_mut() {
            *s = 1e-4;
        }
        trace.abs_coherence[100] *= 1.5;
        trace.stderr[100] = 0.05;
        let fit = fit_rate(&trace, (0.0, 2.0)).unwrap();
        assert!((fit.gamma - 1.0).abs() < 1e-3, "{}", fit.gamma);
    }

    #[test]
    fn phase_drift_slope() {
        let mut trace = exponential(0.0, 300);
        trace.arg_coherence = trace.times.iter().map(|t| -0.7 * t).collect();
        let d = fit_phase_drift(&trace, (0.0, 3.0)).unwrap();
        assert!((d.slope + 0.7).abs() < 1e-12);
    }
}
