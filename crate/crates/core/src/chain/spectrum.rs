use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resonance::fit_lorentzian_gain_masked;
use crate::resonance::LorentzianFit;

/// Half-width of the window used for the local noise floor, bins.
pub const FLOOR_WINDOW_BINS: usize = 50;

/// Minimum tone height above the local floor, dB.
const MIN_TONE_DB: f64 = 3.0;

/// Spectrum-analyser trace: power per resolution bandwidth versus frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTrace {
    frequencies: Vec<f64>,
    psd_dbm: Vec<f64>,
    /// Resolution bandwidth, Hz.
    pub rbw: f64,
    pub pump_on: Option<bool>,
    /// Hz.
    pub pump_frequency: Option<f64>,
    /// Hz.
    pub pilot_frequency: Option<f64>,
    /// dBm at the device input.
    pub pilot_power_dbm: Option<f64>,
}

impl SpectrumTrace {
    pub fn new(frequencies: Vec<f64>, psd_dbm: Vec<f64>, rbw: f64) -> Result<Self> {
        if frequencies.len() != psd_dbm.len() {
            return Err(Error::Validation(format!(
                "{} frequencies but {} power values",
                frequencies.len(),
                psd_dbm.len()
            )));
        }
        if frequencies.is_empty() {
            return Err(Error::Validation("empty spectrum".into()));
        }
        if !(rbw > 0.0) {
            return Err(Error::Validation(format!("rbw must be positive, got {rbw}")));
        }
        if let Some(i) = frequencies.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Validation(format!(
                "frequencies not strictly increasing at index {}",
                i + 1
            )));
        }
        if frequencies.iter().chain(&psd_dbm).any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite spectrum value".into()));
        }
        Ok(Self {
            frequencies,
            psd_dbm,
            rbw,
            pump_on: None,
            pump_frequency: None,
            pilot_frequency: None,
            pilot_power_dbm: None,
        })
    }

    pub fn with_pump(mut self, on: bool, frequency: Option<f64>) -> Self {
        self.pump_on = Some(on);
        self.pump_frequency = frequency;
        self
    }

    pub fn with_pilot(mut self, frequency: f64, power_dbm: Option<f64>) -> Self {
        self.pilot_frequency = Some(frequency);
        self.pilot_power_dbm = power_dbm;
        self
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn psd_dbm(&self) -> &[f64] {
        &self.psd_dbm
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Index of the bin nearest to `f`, if `f` lies within half a bin of
    /// the trace.
    pub fn bin_of(&self, f: f64) -> Option<usize> {
        let n = self.len();
        let half = 0.5
            * self.rbw.max(if n > 1 {
                self.frequencies[1] - self.frequencies[0]
            } else {
                0.0
            });
        if f < self.frequencies[0] - half || f > self.frequencies[n - 1] + half {
            return None;
        }
        let i = self.frequencies.partition_point(|&x| x < f);
        if i == 0 {
            return Some(0);
        }
        if i == n {
            return Some(n - 1);
        }
        Some(if f - self.frequencies[i - 1] <= self.frequencies[i] - f {
            i - 1
        } else {
            i
        })
    }

    /// Bins holding discrete tones (pilot, pump, idler) and their neighbours.
    pub fn tone_bins(&self) -> Vec<usize> {
        let mut tones = Vec::new();
        if let Some(p) = self.pilot_frequency {
            tones.push(p);
            if let (Some(true), Some(fp)) = (self.pump_on, self.pump_frequency) {
                tones.push(2.0 * fp - p);
            }
        }
        if let (Some(true), Some(fp)) = (self.pump_on, self.pump_frequency) {
            tones.push(fp);
        }
        let mut bins: Vec<usize> = tones
            .iter()
            .filter_map(|&f| self.bin_of(f))
            .flat_map(|b| [b.saturating_sub(1), b, (b + 1).min(self.len() - 1)])
            .collect();
        bins.sort_unstable();
        bins.dedup();
        bins
    }

    /// Lorentzian fit of the noise spectrum with tone bins masked.
    pub fn fit_gain_shape(&self) -> Result<LorentzianFit> {
        fit_lorentzian_gain_masked(self, &self.tone_bins())
    }
}

/// A discrete tone measured against the local noise floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToneMeasurement {
    pub bin: usize,
    /// dBm.
    pub peak_dbm: f64,
    /// Median of the window around the tone, tone bins excluded, dBm.
    pub floor_dbm: f64,
    /// Tone power with the floor removed, W.
    pub power: f64,
}

impl ToneMeasurement {
    pub fn snr_db(&self) -> f64 {
        self.peak_dbm - self.floor_dbm
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Tone at frequency `f`: its bin, the local median floor and the
/// floor-subtracted power.
pub fn tone_power(trace: &SpectrumTrace, f: f64) -> Result<ToneMeasurement> {
    let bin = trace
        .bin_of(f)
        .ok_or_else(|| Error::Argument(format!("tone at {f:e} Hz lies outside the trace")))?;
    let mut excluded = trace.tone_bins();
    excluded.extend([bin.saturating_sub(1), bin, (bin + 1).min(trace.len() - 1)]);
    let lo = bin.saturating_sub(FLOOR_WINDOW_BINS);
    let hi = (bin + FLOOR_WINDOW_BINS).min(trace.len() - 1);
    let mut window: Vec<f64> = (lo..=hi)
        .filter(|i| !excluded.contains(i))
        .map(|i| trace.psd_dbm[i])
        .collect();
    if window.is_empty() {
        return Err(Error::Argument("no floor bins around the tone".into()));
    }
    let floor_dbm = median(&mut window);
    let peak_dbm = trace.psd_dbm[bin];
    if peak_dbm - floor_dbm < MIN_TONE_DB {
        return Err(Error::LowContrast(format!(
            "tone at {f:e} Hz is only {:.2} dB above the floor",
            peak_dbm - floor_dbm
        )));
    }
    let mw = |db: f64| 10f64.powf(db / 10.0);
    Ok(ToneMeasurement {
        bin,
        peak_dbm,
        floor_dbm,
        power: (mw(peak_dbm) - mw(floor_dbm)) * 1e-3,
    })
}

/// Pilot-tone SNR in both states and the improvement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrComparison {
    pub on: ToneMeasurement,
    pub off: ToneMeasurement,
    /// dB.
    pub delta_snr: f64,
}

/// SNR improvement of the pilot at `pilot_f` between pump-on and pump-off
/// spectra.
pub fn delta_snr(on: &SpectrumTrace, off: &SpectrumTrace, pilot_f: f64) -> Result<SnrComparison> {
    for t in [on, off] {
        if let (Some(true), Some(fp), Some(b)) = (t.pump_on, t.pump_frequency, t.bin_of(pilot_f)) {
            if t.bin_of(fp).is_some_and(|bp| bp.abs_diff(b) <= 1) {
                return Err(Error::LowContrast(format!(
                    "pump at {fp:e} Hz falls on the pilot bin; the pilot cannot be resolved"
                )));
            }
        }
    }
    let on_t = tone_power(on, pilot_f)?;
    let off_t = tone_power(off, pilot_f)?;
    Ok(SnrComparison {
        on: on_t,
        off: off_t,
        delta_snr: on_t.snr_db() - off_t.snr_db(),
    })
}
