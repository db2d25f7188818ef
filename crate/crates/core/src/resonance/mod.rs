//! One-port resonator reflection: the forward model, a full complex fit with
//! cable-delay background, phase-based resonance extraction and Lorentzian
//! fits of gain/noise spectra.
//!
//! Rates (`kappa_*`) are angular, in s⁻¹. Frequencies are in Hz.
//!
//! Sign convention: the reflection returned here is
//! `Γ(Δ) = 1 − κ_ex / (κ_tot/2 + iΔ)`, so on resonance
//! `Γ = (κ_i − κ_ex)/κ_tot`. The signal gain `g_S` of the amplifier
//! input–output relations uses the opposite overall sign, `Γ = −g_S`.

mod lorentzian;
mod one_port;
mod phase;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use lorentzian::{fit_lorentzian_gain, fit_lorentzian_gain_masked, LorentzianFit};
pub use one_port::{fit_one_port, Background, ResonatorFit, ResonatorUncertainty};
pub use phase::{extract_resonance_from_phase, PhaseResonance, MIN_POINTS_PER_LINEWIDTH};

/// Minimum number of samples in a reflection trace.
pub const MIN_TRACE_POINTS: usize = 5;

/// Frequency-ordered complex reflection samples with acquisition metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexReflectionTrace {
    frequencies: Vec<f64>,
    s11: Vec<Complex64>,
    /// Probe power at the device input, dBm.
    pub probe_power_dbm: Option<f64>,
    /// Gate voltage, V.
    pub gate_voltage: Option<f64>,
}

impl ComplexReflectionTrace {
    pub fn new(frequencies: Vec<f64>, s11: Vec<Complex64>) -> Result<Self> {
        if frequencies.len() != s11.len() {
            return Err(Error::Validation(format!(
                "{} frequencies but {} reflection samples",
                frequencies.len(),
                s11.len()
            )));
        }
        if frequencies.len() < MIN_TRACE_POINTS {
            return Err(Error::Validation(format!(
                "trace needs at least {MIN_TRACE_POINTS} points, got {}",
                frequencies.len()
            )));
        }
        if let Some(i) = frequencies.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Validation(format!(
                "frequencies not strictly increasing at index {}",
                i + 1
            )));
        }
        if frequencies.iter().any(|f| !f.is_finite()) {
            return Err(Error::Validation("non-finite frequency".into()));
        }
        if s11.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation("non-finite reflection sample".into()));
        }
        Ok(Self {
            frequencies,
            s11,
            probe_power_dbm: None,
            gate_voltage: None,
        })
    }

    pub fn with_probe_power_dbm(mut self, dbm: f64) -> Self {
        self.probe_power_dbm = Some(dbm);
        self
    }

    pub fn with_gate_voltage(mut self, v: f64) -> Self {
        self.gate_voltage = Some(v);
        self
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn s11(&self) -> &[Complex64] {
        &self.s11
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn span(&self) -> (f64, f64) {
        (self.frequencies[0], self.frequencies[self.len() - 1])
    }

    /// Multiplies every sample by `scale · exp(i 2π delay f)`.
    pub fn with_background(&self, scale: Complex64, delay: f64) -> Self {
        let s11 = self
            .frequencies
            .iter()
            .zip(&self.s11)
            .map(|(&f, &z)| z * scale * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * delay * f))
            .collect();
        Self { s11, ..self.clone() }
    }
}

/// Single-port cavity reflection at angular detuning `delta = ω − ω_r`.
pub fn reflection_model(delta: f64, kappa_i: f64, kappa_ex: f64) -> Result<Complex64> {
    if !(kappa_i >= 0.0) || !(kappa_ex >= 0.0) {
        return Err(Error::Domain(format!(
            "rates must be non-negative (κ_i = {kappa_i}, κ_ex = {kappa_ex})"
        )));
    }
    if kappa_i + kappa_ex <= 0.0 {
        return Err(Error::Domain("total decay rate is zero".into()));
    }
    Ok(reflection(delta, kappa_i, kappa_ex))
}

/// Unchecked form of [`reflection_model`] for inner loops.
#[inline]
pub(crate) fn reflection(delta: f64, kappa_i: f64, kappa_ex: f64) -> Complex64 {
    let num = Complex64::new(0.5 * (kappa_i - kappa_ex), delta);
    let den = Complex64::new(0.5 * (kappa_i + kappa_ex), delta);
    num / den
}

/// Unwraps a phase sequence by removing ±2π jumps between neighbours.
pub(crate) fn unwrap_phase(phase: &[f64]) -> Vec<f64> {
    use std::f64::consts::PI;
    let mut out = Vec::with_capacity(phase.len());
    let mut offset = 0.0;
    for (i, &p) in phase.iter().enumerate() {
        if i > 0 {
            let d = p - phase[i - 1];
            if d.abs() > PI {
                offset -= 2.0 * PI * (d / (2.0 * PI)).round();
            }
        }
        out.push(p + offset);
    }
    out
}

/// Cable delay estimated from the phase slope in the outer tenth of the
/// trace on each side, where the resonance contributes little.
pub(crate) fn edge_delay(frequencies: &[f64], s11: &[Complex64]) -> f64 {
    let n = frequencies.len();
    let edge = (n / 10).max(3).min(n / 2).max(2);
    let phase = unwrap_phase(&s11.iter().map(|z| z.arg()).collect::<Vec<_>>());
    let slope = |range: std::ops::Range<usize>| -> f64 {
        let m = range.len() as f64;
        let fx: f64 = range.clone().map(|i| frequencies[i]).sum::<f64>() / m;
        let py: f64 = range.clone().map(|i| phase[i]).sum::<f64>() / m;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for i in range {
            sxy += (frequencies[i] - fx) * (phase[i] - py);
            sxx += (frequencies[i] - fx).powi(2);
        }
        if sxx > 0.0 {
            sxy / sxx
        } else {
            0.0
        }
    };
    let s = 0.5 * (slope(0..edge) + slope(n - edge..n));
    s / (2.0 * std::f64::consts::PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn critical_coupling_absorbs() {
        let g = reflection_model(0.0, 1e6, 1e6).unwrap();
        assert!(g.norm() < 1e-15);
    }

    #[test]
    fn lossless_is_all_pass() {
        assert!((reflection_model(0.0, 0.0, 3e6).unwrap() + 1.0).norm() < 1e-15);
        let deltas: Vec<f64> = (-4000..=4000).map(|i| i as f64 * 1e5).collect();
        let phases: Vec<f64> = deltas
            .iter()
            .map(|&d| {
                let g = reflection_model(d, 0.0, 3e6).unwrap();
                assert!((g.norm() - 1.0).abs() < 1e-12);
                g.arg()
            })
            .collect();
        let unwrapped = unwrap_phase(&phases);
        let winding = unwrapped.last().unwrap() - unwrapped[0];
        assert!((winding.abs() - 2.0 * std::f64::consts::PI).abs() < 0.05);
    }

    #[test]
    fn on_resonance_magnitude_from_efficiency() {
        let total = 1e7;
        let g = reflection_model(0.0, 0.17 * total, 0.83 * total).unwrap();
        assert!((g.norm() - 0.66).abs() < 1e-12);
    }

    #[test]
    fn zero_total_rate_rejected() {
        assert!(matches!(reflection_model(0.0, 0.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(reflection_model(0.0, -1.0, 2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn trace_validation() {
        let z = vec![Complex64::new(1.0, 0.0); 5];
        assert!(ComplexReflectionTrace::new(vec![1.0, 2.0, 3.0, 4.0, 5.0], z.clone()).is_ok());
        assert!(ComplexReflectionTrace::new(vec![1.0, 2.0, 2.0, 4.0, 5.0], z.clone()).is_err());
        assert!(ComplexReflectionTrace::new(vec![1.0, 2.0, 3.0, 4.0], z[..4].to_vec()).is_err());
        assert!(ComplexReflectionTrace::new(vec![1.0, 2.0, 3.0, 4.0, 5.0], z[..4].to_vec()).is_err());
    }

    proptest! {
        #[test]
        fn reflection_is_passive(delta in -1e8f64..1e8, ki in 0.0f64..1e7, kex in 0.0f64..1e7) {
            prop_assume!(ki + kex > 1.0);
            let g = reflection_model(delta, ki, kex).unwrap();
            prop_assert!(g.norm() <= 1.0 + 1e-12);
        }

        #[test]
        fn on_resonance_magnitude_exact(ki in 0.0f64..1e7, kex in 0.0f64..1e7) {
            prop_assume!(ki + kex > 1.0);
            let g = reflection_model(0.0, ki, kex).unwrap();
            let expect = (ki - kex).abs() / (ki + kex);
            prop_assert!((g.norm() - expect).abs() <= 1e-14);
        }
    }

    #[test]
    fn far_detuned_is_unity() {
        let g = reflection_model(1e12, 1e6, 2e6).unwrap();
        assert!((g - 1.0).norm() < 1e-5);
    }
}
