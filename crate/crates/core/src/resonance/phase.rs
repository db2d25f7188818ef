use std::f64::consts::PI;

use num_complex::Complex64;

use super::{edge_delay, unwrap_phase, ComplexReflectionTrace};
use crate::error::{Error, Result};

/// Below this sampling density the phase-slope maximum is poorly resolved.
pub const MIN_POINTS_PER_LINEWIDTH: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseResonance {
    /// Frequency of maximum phase slope, Hz.
    pub f_r: f64,
    /// Width of the slope peak divided by the local grid step.
    pub points_per_linewidth: f64,
    pub warnings: Vec<String>,
}

/// Resonant frequency from the point of steepest reflected phase.
///
/// The cable delay is estimated from the outer parts of the trace and
/// removed, the phase is unwrapped, and the maximum of the central-difference
/// slope is refined with a three-point parabola. Two or more separated steep
/// regions (a bifurcated response) are reported as [`Error::Ambiguous`].
pub fn extract_resonance_from_phase(trace: &ComplexReflectionTrace) -> Result<PhaseResonance> {
    let f = trace.frequencies();
    let n = f.len();
    let tau = edge_delay(f, trace.s11());
    let phase: Vec<f64> = f
        .iter()
        .zip(trace.s11())
        .map(|(&fi, &z)| (z * Complex64::from_polar(1.0, -2.0 * PI * tau * (fi - f[0]))).arg())
        .collect();
    let phi = unwrap_phase(&phase);

    // Slope at interior points; the dominant winding sign makes it positive.
    let raw: Vec<f64> = (1..n - 1)
        .map(|i| (phi[i + 1] - phi[i - 1]) / (f[i + 1] - f[i - 1]))
        .collect();
    let dominant = raw
        .iter()
        .copied()
        .max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
        .unwrap_or(0.0);
    if dominant == 0.0 {
        return Err(Error::FitRejected("reflected phase is flat".into()));
    }
    let sign = dominant.signum();
    let slope: Vec<f64> = raw.iter().map(|s| s * sign).collect();
    let m = slope.len();
    let (imax, &smax) = slope
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();

    let regions = steep_regions(&slope, smax);
    if regions.len() > 1 {
        return Err(Error::Ambiguous {
            candidates: regions.iter().map(|&k| f[k + 1]).collect(),
        });
    }

    let offset = if imax > 0 && imax + 1 < m {
        let (a, b, c) = (slope[imax - 1], slope[imax], slope[imax + 1]);
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            0.5 * (a - c) / denom
        } else {
            0.0
        }
    } else {
        0.0
    };
    let k = imax + 1;
    let f_r = if offset >= 0.0 {
        f[k] + offset * (f[(k + 1).min(n - 1)] - f[k])
    } else {
        f[k] + offset * (f[k] - f[k - 1])
    };

    let above: Vec<usize> = (0..m).filter(|&i| slope[i] >= 0.5 * smax).collect();
    let width = f[above[above.len() - 1] + 1] - f[above[0] + 1];
    let step = 0.5 * (f[k + 1] - f[k - 1]);
    let points_per_linewidth = (width / step).max(1.0);
    let mut warnings = Vec::new();
    if points_per_linewidth < MIN_POINTS_PER_LINEWIDTH {
        warnings.push(format!(
            "only {points_per_linewidth:.1} points per linewidth (need {MIN_POINTS_PER_LINEWIDTH})"
        ));
    }
    Ok(PhaseResonance {
        f_r,
        points_per_linewidth,
        warnings,
    })
}

/// Indices of local slope maxima above half of `smax`, merging maxima that
/// are not separated by a valley below half of the smaller peak.
fn steep_regions(slope: &[f64], smax: f64) -> Vec<usize> {
    let m = slope.len();
    let mut peaks: Vec<usize> = (0..m)
        .filter(|&i| {
            let left = if i > 0 { slope[i - 1] } else { f64::NEG_INFINITY };
            let right = if i + 1 < m { slope[i + 1] } else { f64::NEG_INFINITY };
            slope[i] >= 0.5 * smax && slope[i] >= left && slope[i] > right
        })
        .collect();
    let mut merged: Vec<usize> = Vec::new();
    for p in peaks.drain(..) {
        if let Some(&q) = merged.last() {
            let valley = slope[q..=p].iter().copied().fold(f64::INFINITY, f64::min);
            if valley >= 0.5 * slope[q].min(slope[p]) {
                if slope[p] > slope[q] {
                    *merged.last_mut().unwrap() = p;
                }
                continue;
            }
        }
        merged.push(p);
    }
    merged
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resonance::reflection;

    fn trace(n: usize, center: f64, span: f64, ki: f64, kex: f64, f_r: f64) -> ComplexReflectionTrace {
        let freqs: Vec<f64> = (0..n)
            .map(|i| center - span / 2.0 + span * i as f64 / (n - 1) as f64)
            .collect();
        let s = freqs
            .iter()
            .map(|&f| reflection(2.0 * PI * (f - f_r), ki, kex))
            .collect();
        ComplexReflectionTrace::new(freqs, s).unwrap()
    }

    #[test]
    fn symmetric_trace_returns_center() {
        for n in [401, 400] {
            let t = trace(n, 6e9, 40e6, 2.0 * PI * 0.5e6, 2.0 * PI * 2.5e6, 6e9);
            let r = extract_resonance_from_phase(&t).unwrap();
            assert!((r.f_r - 6e9).abs() < 1e-3, "n = {n}: {}", r.f_r - 6e9);
        }
    }

    #[test]
    fn converges_with_grid_refinement() {
        let f_r = 6e9 + 123_456.7;
        let mut errs = Vec::new();
        for n in [101, 401, 1601] {
            let t = trace(n, 6e9, 40e6, 2.0 * PI * 0.5e6, 2.0 * PI * 2.5e6, f_r);
            errs.push((extract_resonance_from_phase(&t).unwrap().f_r - f_r).abs());
        }
        assert!(errs[2] < errs[0]);
        assert!(errs[2] < 2e3);
    }

    #[test]
    fn undercoupled_trace() {
        let f_r = 6e9 + 50e3;
        let t = trace(401, 6e9, 20e6, 2.0 * PI * 2.0e6, 2.0 * PI * 0.5e6, f_r);
        let step = 20e6 / 400.0;
        assert!((extract_resonance_from_phase(&t).unwrap().f_r - f_r).abs() < step);
    }

    #[test]
    fn coarse_grid_warns() {
        let t = trace(21, 6e9, 100e6, 2.0 * PI * 0.5e6, 2.0 * PI * 2.5e6, 6e9);
        let r = extract_resonance_from_phase(&t).unwrap();
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn two_resonances_are_ambiguous() {
        let freqs: Vec<f64> = (0..801).map(|i| 5.98e9 + 40e6 * i as f64 / 800.0).collect();
        let (ki, kex) = (2.0 * PI * 0.2e6, 2.0 * PI * 1.0e6);
        let s = freqs
            .iter()
            .map(|&f| reflection(2.0 * PI * (f - 5.99e9), ki, kex) * reflection(2.0 * PI * (f - 6.01e9), ki, kex))
            .collect();
        let t = ComplexReflectionTrace::new(freqs, s).unwrap();
        match extract_resonance_from_phase(&t) {
            Err(Error::Ambiguous { candidates }) => {
                assert_eq!(candidates.len(), 2);
                assert!((candidates[0] - 5.99e9).abs() < 1e5);
                assert!((candidates[1] - 6.01e9).abs() < 1e5);
            }
            other => panic!("expected ambiguity, got {other:?}"),
        }
    }
}
