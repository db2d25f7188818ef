//! Input–output noise model of a lossy single-port parametric amplifier.
//!
//! Spectral densities are carried as equivalent temperatures (Rayleigh–Jeans,
//! `S = k_B T`). `ρ = κ_i/κ_ex` throughout.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{db_to_linear, BOLTZMANN, PLANCK};
use crate::error::{Error, Result};

/// Noise power spectral density, stored as an equivalent temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpectralDensity {
    temperature: f64,
    /// Hz.
    pub frequency: f64,
}

impl NoiseSpectralDensity {
    pub fn from_temperature(temperature: f64, frequency: f64) -> Result<Self> {
        if !(temperature >= 0.0) {
            return Err(Error::Domain(format!(
                "noise temperature must be >= 0, got {temperature}"
            )));
        }
        Ok(Self { temperature, frequency })
    }

    /// From a density in W/Hz.
    pub fn from_value(value: f64, frequency: f64) -> Result<Self> {
        Self::from_temperature(value / BOLTZMANN, frequency)
    }

    /// W/Hz.
    pub fn value(&self) -> f64 {
        BOLTZMANN * self.temperature
    }

    /// K.
    pub fn equivalent_temperature(&self) -> f64 {
        self.temperature
    }
}

/// Signal and idler gains at a detuning from half the pump frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainPair {
    pub g_s: Complex64,
    pub g_i: Complex64,
    /// Signal offset from the pump, s⁻¹.
    pub detuning: f64,
}

impl GainPair {
    /// Relative violation of the bosonic sum rule for loss ratio `ratio`.
    pub fn sum_rule_residual(&self, ratio: f64) -> f64 {
        let lhs = (1.0 + ratio) * self.g_i.norm_sqr();
        let rhs = self.g_s.norm_sqr() - 1.0 + ratio * (self.g_s + 1.0).norm_sqr();
        (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0)
    }

    /// Power gain `|g_S|²`.
    pub fn signal_gain(&self) -> f64 {
        self.g_s.norm_sqr()
    }
}

/// Zero-point level `V = h f / 2`.
pub fn vacuum_level(frequency: f64) -> Result<NoiseSpectralDensity> {
    if !(frequency >= 0.0) {
        return Err(Error::Domain(format!("frequency must be >= 0, got {frequency}")));
    }
    NoiseSpectralDensity::from_value(0.5 * PLANCK * frequency, frequency)
}

fn check_ratio(ratio: f64) -> Result<()> {
    if !(ratio >= 0.0) || !ratio.is_finite() {
        return Err(Error::Domain(format!("κ_i/κ_ex must be finite and >= 0, got {ratio}")));
    }
    Ok(())
}

/// `|g_I|²` implied by the sum rule.
pub fn idler_from_sumrule(g_s: Complex64, ratio: f64) -> Result<f64> {
    check_ratio(ratio)?;
    let v = (g_s.norm_sqr() - 1.0 + ratio * (g_s + 1.0).norm_sqr()) / (1.0 + ratio);
    if v < -1e-12 * g_s.norm_sqr().max(1.0) {
        return Err(Error::InconsistentGain(format!(
            "|g_S| = {} with κ_i/κ_ex = {ratio} gives |g_I|² = {v:e} < 0",
            g_s.norm()
        )));
    }
    Ok(v.max(0.0))
}

/// Output spectral density with the bath and idler inputs in vacuum.
pub fn output_psd(
    s_in: NoiseSpectralDensity,
    pair: &GainPair,
    kappa_i: f64,
    kappa_ex: f64,
) -> Result<NoiseSpectralDensity> {
    if !(kappa_ex > 0.0) {
        return Err(Error::Domain("κ_ex must be positive".into()));
    }
    let ratio = kappa_i / kappa_ex;
    check_ratio(ratio)?;
    let v = 0.5 * PLANCK * s_in.frequency / BOLTZMANN;
    let t = s_in.temperature * pair.g_s.norm_sqr()
        + v * ratio * (pair.g_s + 1.0).norm_sqr()
        + v * (1.0 + ratio) * pair.g_i.norm_sqr();
    NoiseSpectralDensity::from_temperature(t, s_in.frequency)
}

/// Input-referred added noise of the amplifier.
pub fn added_noise(g_s: Complex64, ratio: f64, frequency: f64) -> Result<NoiseSpectralDensity> {
    check_ratio(ratio)?;
    let g2 = g_s.norm_sqr();
    if !(g2 > 0.0) {
        return Err(Error::Domain("signal gain must be non-zero".into()));
    }
    let v = vacuum_level(frequency)?.temperature;
    let t = v + 2.0 * v * ratio * (g_s + 1.0).norm_sqr() / g2 - v / g2;
    NoiseSpectralDensity::from_temperature(t.max(0.0), frequency)
}

/// High-gain limit of [`added_noise`]: `V(1 + 2ρ)`.
pub fn device_quantum_limit(ratio: f64, frequency: f64) -> Result<NoiseSpectralDensity> {
    check_ratio(ratio)?;
    let v = vacuum_level(frequency)?.temperature;
    NoiseSpectralDensity::from_temperature(v * (1.0 + 2.0 * ratio), frequency)
}

/// Operating point for the expected input-referred noise of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedNoiseInputs {
    /// Power gain `G = |g_S|²`, linear.
    pub gain: f64,
    /// κ_i/κ_ex.
    pub kappa_ratio: f64,
    /// Transmission from the amplifier output to the HEMT reference plane.
    pub eta_s: f64,
    /// HEMT noise referred to the mixing-chamber plane, K.
    pub t_hemt: f64,
    /// Hz.
    pub frequency: f64,
    /// Input noise, K.
    pub input_temperature: f64,
}

impl ExpectedNoiseInputs {
    /// Inputs with vacuum at the signal port.
    pub fn with_vacuum_input(gain: f64, kappa_ratio: f64, eta_s: f64, t_hemt: f64, frequency: f64) -> Result<Self> {
        Ok(Self {
            gain,
            kappa_ratio,
            eta_s,
            t_hemt,
            frequency,
            input_temperature: vacuum_level(frequency)?.temperature,
        })
    }
}

/// Total expected input-referred noise in kelvin, with `g_S = √G` real.
pub fn expected_total_input_noise(p: &ExpectedNoiseInputs) -> Result<f64> {
    if !(p.eta_s > 0.0 && p.eta_s <= 1.0) {
        return Err(Error::Domain(format!("η_s must be in (0, 1], got {}", p.eta_s)));
    }
    if !(p.gain > 0.0) {
        return Err(Error::Domain(format!("gain must be positive, got {}", p.gain)));
    }
    if !(p.t_hemt >= 0.0) {
        return Err(Error::Domain(format!("T_hemt must be >= 0, got {}", p.t_hemt)));
    }
    let g_s = Complex64::new(p.gain.sqrt(), 0.0);
    let v = vacuum_level(p.frequency)?.temperature;
    let add = added_noise(g_s, p.kappa_ratio, p.frequency)?.temperature;
    let referral = p.eta_s * p.gain;
    Ok(p.input_temperature + add + (1.0 - p.eta_s) * v / referral + p.t_hemt / referral)
}

/// Coupling efficiency `κ_ex/κ` at which the expected noise equals `target`
/// (K), with everything else fixed by `p`. Searched on `[lo, hi]`.
pub fn efficiency_for_total_noise(target: f64, p: &ExpectedNoiseInputs, lo: f64, hi: f64) -> Result<f64> {
    let at = |e: f64| -> Result<f64> {
        let mut q = *p;
        q.kappa_ratio = 1.0 / e - 1.0;
        Ok(expected_total_input_noise(&q)? - target)
    };
    if !(lo > 0.0 && hi <= 1.0 && lo < hi) {
        return Err(Error::Argument(format!("invalid efficiency bracket [{lo}, {hi}]")));
    }
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (at(a)?, at(b)?);
    if fa.signum() == fb.signum() {
        return Err(Error::Domain(format!(
            "target {target} K is not reached for efficiencies in [{lo}, {hi}]"
        )));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (at(m)?.signum()) == fa.signum() {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-14 {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

/// A value with a symmetric one-sigma uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Uncertain {
    pub value: f64,
    pub sigma: f64,
}

impl Uncertain {
    pub fn new(value: f64, sigma: f64) -> Self {
        Self { value, sigma }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, sigma: 0.0 }
    }
}

/// Inputs to [`uncertainty_band`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBandInputs {
    /// Power gain, dB.
    pub gain_db: Uncertain,
    /// Coupling efficiency `κ_ex/κ`.
    pub efficiency: Uncertain,
    pub eta_s: Uncertain,
    /// K.
    pub t_hemt: Uncertain,
    /// Hz.
    pub frequency: f64,
    /// Input noise, K.
    pub input_temperature: f64,
    /// Flat calibration-drift uncertainty on `η_s`, dB.
    pub drift_db: f64,
}

impl NoiseBandInputs {
    /// Default calibration-drift bound on `η_s`, dB.
    pub const DEFAULT_DRIFT_DB: f64 = 0.2;

    fn central(&self) -> ExpectedNoiseInputs {
        self.at([
            self.gain_db.value,
            self.efficiency.value,
            self.eta_s.value,
            self.t_hemt.value,
        ])
    }

    fn at(&self, x: [f64; 4]) -> ExpectedNoiseInputs {
        ExpectedNoiseInputs {
            gain: db_to_linear(x[0]),
            kappa_ratio: 1.0 / x[1] - 1.0,
            eta_s: x[2],
            t_hemt: x[3],
            frequency: self.frequency,
            input_temperature: self.input_temperature,
        }
    }
}

/// Propagated noise band, K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseBand {
    pub central: f64,
    pub sigma: f64,
    pub low: f64,
    pub high: f64,
    /// One-sigma contribution of each input, K.
    pub contributions: Vec<(String, f64)>,
}

/// First-order propagation of the input uncertainties (central finite
/// differences), with the drift term applied to `η_s` as an extra
/// independent contribution.
pub fn uncertainty_band(inputs: &NoiseBandInputs) -> Result<NoiseBand> {
    let central = expected_total_input_noise(&inputs.central())?;
    let x0 = [
        inputs.gain_db.value,
        inputs.efficiency.value,
        inputs.eta_s.value,
        inputs.t_hemt.value,
    ];
    let sig = [
        inputs.gain_db.sigma,
        inputs.efficiency.sigma,
        inputs.eta_s.sigma,
        inputs.t_hemt.sigma,
    ];
    if sig.iter().any(|s| !(*s >= 0.0)) || !(inputs.drift_db >= 0.0) {
        return Err(Error::Argument("uncertainties must be >= 0".into()));
    }
    let derivative = |k: usize| -> Result<f64> {
        let h = 1e-6 * x0[k].abs().max(1e-6);
        let mut up = x0;
        let mut dn = x0;
        up[k] += h;
        dn[k] -= h;
        // Keep the step inside (0, 1] for the bounded inputs.
        if k == 1 || k == 2 {
            up[k] = up[k].min(1.0);
        }
        let fu = expected_total_input_noise(&inputs.at(up))?;
        let fd = expected_total_input_noise(&inputs.at(dn))?;
        Ok((fu - fd) / (up[k] - dn[k]))
    };
    let names = ["gain", "efficiency", "eta_s", "t_hemt"];
    let mut contributions = Vec::new();
    for k in 0..4 {
        let c = if sig[k] == 0.0 {
            0.0
        } else {
            (derivative(k)? * sig[k]).abs()
        };
        contributions.push((names[k].to_string(), c));
    }
    let drift_sigma = inputs.eta_s.value * (db_to_linear(inputs.drift_db) - 1.0);
    let drift = if drift_sigma == 0.0 {
        0.0
    } else {
        (derivative(2)? * drift_sigma).abs()
    };
    contributions.push(("eta_s_drift".to_string(), drift));
    let sigma = contributions.iter().map(|c| c.1 * c.1).sum::<f64>().sqrt();
    Ok(NoiseBand {
        central,
        sigma,
        low: central - sigma,
        high: central + sigma,
        contributions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn vacuum_quantum_limits() {
        let t = |f: f64| 2.0 * vacuum_level(f).unwrap().equivalent_temperature();
        assert!((vacuum_level(5.942e9).unwrap().equivalent_temperature() - 0.1425).abs() < 5e-4);
        assert!((t(5.942e9) - 0.285).abs() < 1e-3);
        assert!((t(5.7839e9) - 0.278).abs() < 1e-3);
        assert_eq!(t(0.0), 0.0);
    }

    #[test]
    fn sum_rule_examples() {
        assert!((idler_from_sumrule(c(10.0), 0.0).unwrap() - 99.0).abs() < 1e-12);
        let (ki, kex) = (0.3, 1.0);
        let off = c((kex - ki) / (ki + kex));
        assert!(idler_from_sumrule(off, ki / kex).unwrap().abs() < 1e-15);
        assert!((idler_from_sumrule(c(1.0), 0.5).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            idler_from_sumrule(c(0.5), 0.0),
            Err(Error::InconsistentGain(_))
        ));
    }

    fn pair(g_s: Complex64, ratio: f64) -> GainPair {
        let gi2 = idler_from_sumrule(g_s, ratio).unwrap();
        GainPair {
            g_s,
            g_i: c(gi2.sqrt()),
            detuning: 1e5,
        }
    }

    #[test]
    fn output_psd_examples() {
        let f = 6e9;
        let v = vacuum_level(f).unwrap();
        let (ki, kex) = (2e6, 1e7);
        let off = pair(c((kex - ki) / (ki + kex)), ki / kex);
        let out = output_psd(v, &off, ki, kex).unwrap();
        assert!((out.equivalent_temperature() / v.equivalent_temperature() - 1.0).abs() < 1e-12);

        let g = pair(c(7.0), 0.0);
        let out = output_psd(v, &g, 0.0, kex).unwrap();
        let expect = v.equivalent_temperature() * (2.0 * 49.0 - 1.0);
        assert!((out.equivalent_temperature() - expect).abs() < 1e-12 * expect);

        let s = NoiseSpectralDensity::from_temperature(3.0, f).unwrap();
        let unity = GainPair {
            g_s: c(1.0),
            g_i: c(0.0),
            detuning: 0.0,
        };
        assert_eq!(output_psd(s, &unity, 0.0, kex).unwrap().equivalent_temperature(), 3.0);
    }

    #[test]
    fn added_noise_limits() {
        let f = 6e9;
        let v = vacuum_level(f).unwrap().equivalent_temperature();
        let big = added_noise(c(1e6), 0.0, f).unwrap().equivalent_temperature();
        assert!((big - v).abs() < 1e-9 * v);
        let rho = 0.1;
        let lim = added_noise(c(1e6), rho, f).unwrap().equivalent_temperature();
        let dql = device_quantum_limit(rho, f).unwrap().equivalent_temperature();
        assert!((lim - dql).abs() < 1e-5 * dql);
    }

    #[test]
    fn expected_total_examples() {
        let f = 6e9;
        let v = vacuum_level(f).unwrap().equivalent_temperature();
        let p = ExpectedNoiseInputs::with_vacuum_input(1e12, 0.0, 0.8, 1.6, f).unwrap();
        assert!((expected_total_input_noise(&p).unwrap() - 2.0 * v).abs() < 1e-9);
        let q = ExpectedNoiseInputs::with_vacuum_input(1.0, 0.0, 1.0, 1.61, f).unwrap();
        assert!((expected_total_input_noise(&q).unwrap() - (v + 1.61)).abs() < 1e-12);
        let bad = ExpectedNoiseInputs { eta_s: 0.0, ..q };
        assert!(expected_total_input_noise(&bad).is_err());
    }

    #[test]
    fn round_trip_value_temperature() {
        for t in [0.0, 1e-3, 0.1425, 1.61, 300.0] {
            let s = NoiseSpectralDensity::from_temperature(t, 6e9).unwrap();
            assert_eq!(s.value(), BOLTZMANN * s.equivalent_temperature());
            assert_eq!(s.equivalent_temperature(), t);
        }
    }

    fn fig5c_band(scale: f64) -> NoiseBandInputs {
        NoiseBandInputs {
            gain_db: Uncertain::new(20.0, 0.2 * scale),
            efficiency: Uncertain::new(0.91, 0.02 * scale),
            eta_s: Uncertain::new(0.8, 0.03 * scale),
            t_hemt: Uncertain::new(1.61, 0.1 * scale),
            frequency: 5.7839e9,
            input_temperature: vacuum_level(5.7839e9).unwrap().equivalent_temperature(),
            drift_db: NoiseBandInputs::DEFAULT_DRIFT_DB * scale,
        }
    }

    #[test]
    fn zero_uncertainty_zero_band() {
        let b = uncertainty_band(&fig5c_band(0.0)).unwrap();
        assert_eq!(b.sigma, 0.0);
        assert_eq!(b.low, b.high);
    }

    #[test]
    fn band_scales_linearly() {
        let a = uncertainty_band(&fig5c_band(1.0)).unwrap();
        let b = uncertainty_band(&fig5c_band(2.0)).unwrap();
        assert!((b.sigma / a.sigma - 2.0).abs() < 0.02);
    }

    #[test]
    fn band_matches_monte_carlo() {
        let inputs = fig5c_band(1.0);
        let band = uncertainty_band(&inputs).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let std = Normal::new(0.0, 1.0).unwrap();
        let n = 100_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| {
                let mut z = || std.sample(&mut rng);
                let drift = 10f64.powf(z() * inputs.drift_db / 10.0);
                let p = ExpectedNoiseInputs {
                    gain: db_to_linear(inputs.gain_db.value + z() * inputs.gain_db.sigma),
                    kappa_ratio: 1.0 / (inputs.efficiency.value + z() * inputs.efficiency.sigma) - 1.0,
                    eta_s: ((inputs.eta_s.value + z() * inputs.eta_s.sigma) * drift).min(1.0),
                    t_hemt: inputs.t_hemt.value + z() * inputs.t_hemt.sigma,
                    frequency: inputs.frequency,
                    input_temperature: inputs.input_temperature,
                };
                expected_total_input_noise(&p).unwrap()
            })
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let sd = (samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((sd / band.sigma - 1.0).abs() < 0.1, "MC {sd} vs linear {}", band.sigma);
    }

    proptest! {
        #[test]
        fn sum_rule_holds_for_constructed_pairs(g in 1.0f64..100.0, rho in 0.0f64..2.0) {
            let p = pair(c(g), rho);
            prop_assert!(p.sum_rule_residual(rho) < 1e-9);
        }

        #[test]
        fn vacuum_passthrough(rho in 0.0f64..10.0) {
            let f = 6e9;
            let kex = 1e7;
            let ki = rho * kex;
            let off = pair(c((kex - ki) / (ki + kex)), rho);
            let v = vacuum_level(f).unwrap();
            let out = output_psd(v, &off, ki, kex).unwrap();
            prop_assert!((out.equivalent_temperature() / v.equivalent_temperature() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn added_noise_lower_bound(g in 1.0f64..1e3, rho in 0.0f64..2.0) {
            let f = 6e9;
            let v = vacuum_level(f).unwrap().equivalent_temperature();
            let a = added_noise(c(g), rho, f).unwrap().equivalent_temperature();
            prop_assert!(a >= v * (1.0 - 1.0 / (g * g)) * (1.0 - 1e-12));
        }

        // With a HEMT at least as noisy as the vacuum level, which holds for
        // any cryogenic chain.
        #[test]
        fn expected_total_monotone(
            g_db in 5.0f64..30.0,
            rho in 0.0f64..1.0,
            eta in 0.2f64..0.99,
            t in 0.2f64..5.0,
        ) {
            let f = 6e9;
            let base = ExpectedNoiseInputs::with_vacuum_input(db_to_linear(g_db), rho, eta, t, f).unwrap();
            let at = |q: ExpectedNoiseInputs| expected_total_input_noise(&q).unwrap();
            let t0 = at(base);
            let more_gain = at(ExpectedNoiseInputs { gain: base.gain * 1.01, ..base });
            let more_eta = at(ExpectedNoiseInputs { eta_s: eta + 0.005, ..base });
            let more_rho = at(ExpectedNoiseInputs { kappa_ratio: rho + 0.01, ..base });
            let hotter = at(ExpectedNoiseInputs { t_hemt: t + 0.01, ..base });
            prop_assert!(more_gain < t0);
            prop_assert!(more_eta < t0);
            prop_assert!(more_rho > t0);
            prop_assert!(hotter > t0);
        }
    }
}
