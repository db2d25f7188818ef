//! Measurement-chain bookkeeping: HEMT calibration against a thermal sweep,
//! insertion losses, on/off transmissions, pilot-tone gain, attenuation
//! estimates and noise referral back to the device input.
//!
//! Noise is expressed in kelvin. Transmissions are linear power ratios.

mod hemt;
mod spectrum;

use serde::{Deserialize, Serialize};

use crate::constants::{watts_to_dbm, BOLTZMANN, PLANCK};
use crate::error::{Error, Result};
use crate::resonance::LorentzianFit;

pub use hemt::{callen_welton_temperature, fit_hemt_calibration, HemtCalibration, MIN_CALIBRATION_POINTS};
pub use spectrum::{delta_snr, tone_power, SnrComparison, SpectrumTrace, ToneMeasurement, FLOOR_WINDOW_BINS};

/// Transmissions, gain and HEMT noise of the readout chain at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseChain {
    pub eta_s: f64,
    pub eta_c_off: f64,
    /// Net on-state gain, linear.
    pub gain: f64,
    /// K.
    pub t_hemt_mc: f64,
    /// Hz.
    pub frequency: f64,
}

impl NoiseChain {
    pub fn new(eta_s: f64, eta_c_off: f64, gain: f64, t_hemt_mc: f64, frequency: f64) -> Result<Self> {
        if !(eta_s > 0.0 && eta_s <= 1.0) || !(eta_c_off > 0.0 && eta_c_off <= 1.0) {
            return Err(Error::Domain(format!(
                "transmissions must be in (0, 1], got η_s = {eta_s}, η_c,off = {eta_c_off}"
            )));
        }
        if !(gain > 0.0) || !(t_hemt_mc >= 0.0) || !(frequency > 0.0) {
            return Err(Error::Domain("need G > 0, T_hemt >= 0 and f > 0".into()));
        }
        Ok(Self {
            eta_s,
            eta_c_off,
            gain,
            t_hemt_mc,
            frequency,
        })
    }

    /// Net transmission with the amplifier off, `η_c,off η_s`.
    pub fn eta_off(&self) -> f64 {
        self.eta_c_off * self.eta_s
    }

    /// Net transmission with the amplifier on, `G η_s`.
    pub fn eta_on(&self) -> f64 {
        self.gain * self.eta_s
    }
}

pub fn eta_off(chain: &NoiseChain) -> f64 {
    chain.eta_off()
}

pub fn eta_on(chain: &NoiseChain) -> f64 {
    chain.eta_on()
}

/// Net gain at the pilot, `G = η_c,off · P_on / P_off`.
pub fn gain_from_pilot(p_on: f64, p_off: f64, eta_c_off: f64) -> Result<f64> {
    if !(p_off > 0.0) {
        return Err(Error::Domain(format!(
            "pump-off pilot power must be positive, got {p_off}"
        )));
    }
    if !(p_on >= 0.0) || !(eta_c_off > 0.0 && eta_c_off <= 1.0) {
        return Err(Error::Domain("need P_on >= 0 and η_c,off in (0, 1]".into()));
    }
    Ok(eta_c_off * p_on / p_off)
}

/// Frequency-dependent gain: the pilot-tone gain carried across the band by
/// the shape of a Lorentzian fitted to the pump-on noise spectrum,
/// `G(f) = 1 + (G_pilot − 1) · L(f)/L(f_pilot)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainProfile {
    pub shape: LorentzianFit,
    pub pilot_frequency: f64,
    pub pilot_gain: f64,
}

impl GainProfile {
    pub fn new(shape: LorentzianFit, pilot_frequency: f64, pilot_gain: f64) -> Result<Self> {
        if !(pilot_gain > 0.0) {
            return Err(Error::Domain("pilot gain must be positive".into()));
        }
        if shape.shape(pilot_frequency) < 1e-6 {
            return Err(Error::Domain("pilot lies far outside the gain line".into()));
        }
        Ok(Self {
            shape,
            pilot_frequency,
            pilot_gain,
        })
    }

    pub fn gain(&self, f: f64) -> f64 {
        1.0 + (self.pilot_gain - 1.0) * self.shape.shape(f) / self.shape.shape(self.pilot_frequency)
    }
}

/// Decomposition of a measured noise temperature at the HEMT reference
/// plane into device-input quantities, K.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Referral {
    /// `S_⋄/η`: everything referred to the device input.
    pub total: f64,
    /// Noise that entered at the device input, after removing the loss and
    /// HEMT contributions.
    pub input_noise: f64,
    /// `(1−η)/η · V/k_B`.
    pub loss_term: f64,
    /// `T_hemt/η`.
    pub hemt_term: f64,
}

/// Refers `s_diamond` (K at the reference plane) through a beamsplitter of
/// transmission `eta` followed by HEMT noise `t_hemt_mc`.
pub fn refer_to_input(s_diamond: f64, eta: f64, t_hemt_mc: f64, frequency: f64) -> Result<Referral> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Domain(format!("η must be in (0, 1], got {eta}")));
    }
    if !(frequency >= 0.0) || !(t_hemt_mc >= 0.0) {
        return Err(Error::Domain("need f >= 0 and T_hemt >= 0".into()));
    }
    let v = 0.5 * PLANCK * frequency / BOLTZMANN;
    let loss_term = (1.0 - eta) * v / eta;
    let hemt_term = t_hemt_mc / eta;
    Ok(Referral {
        total: s_diamond / eta,
        input_noise: (s_diamond - (1.0 - eta) * v - t_hemt_mc) / eta,
        loss_term,
        hemt_term,
    })
}

/// Intermediate values of the attenuation estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttenuationEstimate {
    /// Noise floor `k_B T rbw`, dBm.
    pub floor_dbm: f64,
    /// Signal at the device input inferred from the floor and margin, dBm.
    pub input_signal_dbm: f64,
    /// dB, negative for loss.
    pub attenuation_db: f64,
}

/// Line attenuation between the source output and the device input.
pub fn estimate_attenuation(
    signal_dbm_out: f64,
    floor_margin_db: f64,
    t_noise: f64,
    rbw: f64,
    cavity_loss_db: f64,
) -> Result<AttenuationEstimate> {
    if !(rbw > 0.0) || !(t_noise > 0.0) {
        return Err(Error::Domain(format!("need rbw > 0 and T > 0, got {rbw}, {t_noise}")));
    }
    let floor_dbm = watts_to_dbm(BOLTZMANN * t_noise * rbw);
    let input_signal_dbm = floor_dbm + floor_margin_db;
    Ok(AttenuationEstimate {
        floor_dbm,
        input_signal_dbm,
        attenuation_db: input_signal_dbm + cavity_loss_db.abs() - signal_dbm_out,
    })
}

/// Mean and standard deviation of `a − b` (dB) over `band`, with `b`
/// interpolated linearly onto the samples of `a`.
pub fn insertion_loss_diff(a: (&[f64], &[f64]), b: (&[f64], &[f64]), band: (f64, f64)) -> Result<(f64, f64)> {
    for (f, v) in [a, b] {
        if f.len() != v.len() || f.len() < 2 {
            return Err(Error::Argument("traces need matching lengths of at least 2".into()));
        }
        if f.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Validation("trace frequencies must increase".into()));
        }
    }
    let lo = band.0.max(a.0[0]).max(b.0[0]);
    let hi = band.1.min(a.0[a.0.len() - 1]).min(b.0[b.0.len() - 1]);
    let diffs: Vec<f64> =
        a.0.iter()
            .zip(a.1)
            .filter(|(&f, _)| f >= lo && f <= hi)
            .map(|(&f, &va)| va - interpolate(b.0, b.1, f))
            .collect();
    if diffs.is_empty() {
        return Err(Error::Domain(format!(
            "traces do not overlap within [{:e}, {:e}] Hz",
            band.0, band.1
        )));
    }
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = if diffs.len() > 1 {
        diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok((mean, var.sqrt()))
}

fn interpolate(f: &[f64], v: &[f64], x: f64) -> f64 {
    let i = f.partition_point(|&p| p <= x);
    if i == 0 {
        return v[0];
    }
    if i >= f.len() {
        return v[f.len() - 1];
    }
    let t = (x - f[i - 1]) / (f[i] - f[i - 1]);
    v[i - 1] + t * (v[i] - v[i - 1])
}
