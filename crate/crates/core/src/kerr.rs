//! Kerr nonlinearity: measured from the power dependence of the resonant
//! frequency, and predicted from the junction embedding.
//!
//! `K` is the angular Kerr constant of `H = ħ(ω̃₀ + (K/2)⟨A†A⟩)A†A`, so the
//! resonance moves by `K/2` per intracavity photon.

use std::f64::consts::PI;

use crate::circuit::{CircuitModel, JunctionState};
use crate::constants::{ELEMENTARY_CHARGE, FLUX_QUANTUM, HBAR, PLANCK};
use crate::error::{Error, Result};
use crate::resonance::ResonatorFit;

/// One point of a probe-power sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSweepPoint {
    /// W at the device input.
    pub input_power: f64,
    /// Hz.
    pub signal_frequency: f64,
    /// Hz.
    pub resonant_frequency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KerrEstimate {
    /// Signed, s⁻¹.
    pub kerr: f64,
    pub sigma_kerr: f64,
    /// Resonance shift per input power, Hz/W.
    pub kerr_per_power: f64,
    pub sigma_kerr_per_power: f64,
    /// Intercept of the frequency-versus-photon-number line, Hz.
    pub zero_power_frequency: f64,
    pub points_used: usize,
    pub warnings: Vec<String>,
}

impl KerrEstimate {
    /// `K/2π`, Hz.
    pub fn kerr_hz(&self) -> f64 {
        self.kerr / (2.0 * PI)
    }

    /// Shift per power in MHz/fW.
    pub fn mhz_per_fw(&self) -> f64 {
        self.kerr_per_power * 1e-6 * 1e-15
    }
}

/// Mean intracavity photon number for a probe of power `p_in` (W) at `f_s`
/// detuned by `delta` (s⁻¹) from the resonance.
pub fn photon_number(p_in: f64, f_s: f64, kappa_ex: f64, kappa_i: f64, delta: f64) -> f64 {
    let k = kappa_ex + kappa_i;
    let den = k * k + 4.0 * delta * delta;
    if kappa_ex == 0.0 || p_in == 0.0 {
        return 0.0;
    }
    4.0 * kappa_ex * p_in / den / (PLANCK * f_s)
}

/// Resonance shift per input power on resonance, Hz/W, for Kerr constant
/// `kerr` (s⁻¹).
pub fn shift_per_power(kerr: f64, f_s: f64, kappa_ex: f64, kappa_i: f64) -> f64 {
    0.5 * kerr / (2.0 * PI) * photon_number(1.0, f_s, kappa_ex, kappa_i, 0.0)
}

struct Line {
    slope: f64,
    intercept: f64,
    sigma_slope: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median pairwise slope and MAD-based residual scale.
fn theil_sen(x: &[f64], y: &[f64]) -> (f64, f64) {
    let mut slopes = Vec::new();
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            if x[j] != x[i] {
                slopes.push((y[j] - y[i]) / (x[j] - x[i]));
            }
        }
    }
    let slope = median(slopes);
    let intercept = median(x.iter().zip(y).map(|(a, b)| b - slope * a).collect());
    let r: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - intercept - slope * a).collect();
    let m = median(r.clone());
    (slope, 1.4826 * median(r.iter().map(|v| (v - m).abs()).collect()))
}

fn fit_line(x: &[f64], y: &[f64]) -> Line {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let s2 = if x.len() > 2 { ssr / (n - 2.0) } else { 0.0 };
    Line {
        slope,
        intercept,
        sigma_slope: if sxx > 0.0 { (s2 / sxx).sqrt() } else { f64::INFINITY },
    }
}

/// Kerr constant from a probe-power sweep, using the cavity rates of `cavity`.
///
/// Points whose resonance has moved by more than a quarter linewidth from
/// the lowest-power point are dropped; at least three must remain.
pub fn kerr_from_sweep(points: &[PowerSweepPoint], cavity: &ResonatorFit) -> Result<KerrEstimate> {
    if points.len() < 3 {
        return Err(Error::Argument(format!(
            "need at least 3 sweep points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|p| !(p.input_power >= 0.0) || !(p.signal_frequency > 0.0) || !(p.resonant_frequency > 0.0))
    {
        return Err(Error::Argument(
            "sweep points need P >= 0 and positive frequencies".into(),
        ));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| {
        a.input_power
            .total_cmp(&b.input_power)
            .then(a.resonant_frequency.total_cmp(&b.resonant_frequency))
            .then(a.signal_frequency.total_cmp(&b.signal_frequency))
    });
    let limit = cavity.kappa_total() / (2.0 * PI) / 4.0;
    let f_ref = sorted[0].resonant_frequency;
    let used: Vec<PowerSweepPoint> = sorted
        .iter()
        .copied()
        .filter(|p| (p.resonant_frequency - f_ref).abs() < limit)
        .collect();
    if used.len() < 3 {
        return Err(Error::Argument(format!(
            "only {} points within the low-power regime (shift < {limit:.3e} Hz)",
            used.len()
        )));
    }

    let n: Vec<f64> = used
        .iter()
        .map(|p| {
            let delta = 2.0 * PI * (p.signal_frequency - p.resonant_frequency);
            photon_number(
                p.input_power,
                p.signal_frequency,
                cavity.kappa_ex,
                cavity.kappa_i,
                delta,
            )
        })
        .collect();
    let w: Vec<f64> = used.iter().map(|p| 2.0 * PI * p.resonant_frequency).collect();
    let photon_line = fit_line(&n, &w);
    let power: Vec<f64> = used.iter().map(|p| p.input_power).collect();
    let freq: Vec<f64> = used.iter().map(|p| p.resonant_frequency).collect();
    let power_line = fit_line(&power, &freq);

    let mut warnings = Vec::new();
    // Robust trend so a single outlier cannot hide itself in the tolerance.
    let (robust_slope, robust_sd) = theil_sen(&power, &freq);
    let tol = 3.0 * robust_sd;
    let direction = robust_slope.signum();
    let reversals = sorted
        .windows(2)
        .filter(|p| direction * (p[1].resonant_frequency - p[0].resonant_frequency) < -tol)
        .count();
    if direction != 0.0 && reversals > 0 {
        warnings.push(format!(
            "resonance is non-monotone in power ({reversals} reversals beyond noise); sweep may reach the nonlinear regime"
        ));
    }
    if used.len() < sorted.len() {
        warnings.push(format!(
            "{} high-power points outside the low-power regime were excluded",
            sorted.len() - used.len()
        ));
    }

    Ok(KerrEstimate {
        kerr: 2.0 * photon_line.slope,
        sigma_kerr: 2.0 * photon_line.sigma_slope,
        kerr_per_power: power_line.slope,
        sigma_kerr_per_power: power_line.sigma_slope,
        zero_power_frequency: photon_line.intercept / (2.0 * PI),
        points_used: used.len(),
        warnings,
    })
}

/// Predicted Kerr constant `K = −e²/(2ħ C_eff) · (L_eff/L_J) · Δū⁴`, s⁻¹.
pub fn kerr_predict(state: &JunctionState) -> f64 {
    if state.delta_u_bar == 0.0 || state.l_j == 0.0 {
        return 0.0;
    }
    let charging = ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * HBAR * state.c_eff);
    -charging * (state.l_eff / state.l_j) * state.delta_u_bar.powi(4)
}

/// Josephson inductance `Φ0/(2π I_c)`, H.
pub fn josephson_inductance(i_c: f64) -> Result<f64> {
    if !(i_c > 0.0) {
        return Err(Error::Domain(format!("critical current must be positive, got {i_c}")));
    }
    Ok(FLUX_QUANTUM / (2.0 * PI * i_c))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KerrDesign {
    /// H.
    pub l_j: f64,
    pub state: JunctionState,
    /// s⁻¹.
    pub kerr: f64,
}

/// Kerr constant for a junction of critical current `i_c` embedded in `model`.
pub fn kerr_design(i_c: f64, model: &CircuitModel) -> Result<KerrDesign> {
    let l_j = josephson_inductance(i_c)?;
    let state = JunctionState::from_inductance(l_j, model)?;
    Ok(KerrDesign {
        l_j,
        state,
        kerr: kerr_predict(&state),
    })
}
