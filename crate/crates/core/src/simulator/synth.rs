use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};

use super::{gain_pair_at, steady_state, Branch, KerrCavity, PumpDrive};
use crate::chain::{NoiseChain, SpectrumTrace};
use crate::constants::{watts_to_dbm, BOLTZMANN};
use crate::error::{Error, Result};
use crate::paramp::{output_psd, vacuum_level};
use crate::resonance::{reflection, ComplexReflectionTrace};

/// Reflection of a probe of power `probe_power` (W) swept over `grid`, with
/// complex Gaussian noise of standard deviation `noise_sigma` per
/// quadrature. The steady state is recomputed at every frequency.
pub fn synth_reflection(
    cavity: &KerrCavity,
    probe_power: f64,
    grid: &[f64],
    noise_sigma: f64,
    seed: u64,
    branch: Branch,
) -> Result<ComplexReflectionTrace> {
    if !(noise_sigma >= 0.0) {
        return Err(Error::Argument(format!("noise sigma must be >= 0, got {noise_sigma}")));
    }
    let g = 0.5 * cavity.kerr;
    let mut s11 = Vec::with_capacity(grid.len());
    for &f in grid {
        let drive = PumpDrive::new(f, probe_power)?;
        let n = steady_state(cavity, &drive, branch).photons;
        s11.push(reflection(
            2.0 * PI * (f - cavity.f_r) - g * n,
            cavity.kappa_i,
            cavity.kappa_ex,
        ));
    }
    if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_sigma).map_err(|e| Error::Argument(e.to_string()))?;
        for z in s11.iter_mut() {
            let re = normal.sample(&mut rng);
            let im = normal.sample(&mut rng);
            *z += Complex64::new(re, im);
        }
    }
    ComplexReflectionTrace::new(grid.to_vec(), s11).map(|t| t.with_probe_power_dbm(watts_to_dbm(probe_power)))
}

/// Probe tone injected at the device input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotTone {
    /// Hz.
    pub frequency: f64,
    /// W.
    pub power: f64,
}

/// Spectrum-analyser settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumConfig {
    /// Hz.
    pub center: f64,
    pub bins: usize,
    /// Resolution bandwidth and bin spacing, Hz.
    pub rbw: f64,
    /// Number of averaged sweeps; the floor of each bin is Gamma-distributed
    /// with this shape (1 gives exponential statistics).
    pub averages: u32,
}

impl SpectrumConfig {
    pub fn frequencies(&self) -> Vec<f64> {
        let half = (self.bins / 2) as f64;
        (0..self.bins)
            .map(|k| self.center + (k as f64 - half) * self.rbw)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPair {
    pub on: SpectrumTrace,
    pub off: SpectrumTrace,
}

/// Pump-on and pump-off spectra seen at the HEMT reference plane.
///
/// The floor of each bin is the amplifier output noise (vacuum at the input)
/// passed through the system transmission, plus HEMT noise. The pilot is
/// amplified by `|g_S|²`, the idler appears at `2 f_pump − f_pilot` with
/// `|g_I|²`, and the pump leaks through with the cavity's mean-field
/// reflectance. Pump-off, the pilot is attenuated by `η_c,off η_s`.
pub fn synth_spectrum(
    cavity: &KerrCavity,
    drive: &PumpDrive,
    chain: &NoiseChain,
    pilot: PilotTone,
    config: &SpectrumConfig,
    seed: u64,
) -> Result<SpectrumPair> {
    if config.bins < 3 || !(config.rbw > 0.0) || config.averages == 0 {
        return Err(Error::Argument("need >= 3 bins, rbw > 0 and >= 1 average".into()));
    }
    let freqs = config.frequencies();
    let lo = freqs[0] - 0.5 * config.rbw;
    let hi = freqs[freqs.len() - 1] + 0.5 * config.rbw;
    if pilot.frequency < lo || pilot.frequency > hi {
        return Err(Error::Argument("pilot lies outside the simulated span".into()));
    }
    let ss = steady_state(cavity, drive, Branch::Low);
    let bin_of = |f: f64| -> Option<usize> {
        if f < lo || f > hi {
            return None;
        }
        let k = ((f - freqs[0]) / config.rbw).round();
        Some((k.max(0.0) as usize).min(freqs.len() - 1))
    };

    let mut floor_on = Vec::with_capacity(freqs.len());
    let mut floor_off = Vec::with_capacity(freqs.len());
    for &f in &freqs {
        let v = vacuum_level(f)?;
        let pair = gain_pair_at(cavity, drive, ss.photons, 2.0 * PI * (f - drive.f_pump))?;
        let s_j = output_psd(v, &pair, cavity.kappa_i, cavity.kappa_ex)?.equivalent_temperature();
        let vt = v.equivalent_temperature();
        let on = chain.eta_s * s_j + (1.0 - chain.eta_s) * vt + chain.t_hemt_mc;
        let off = vt + chain.t_hemt_mc;
        floor_on.push(BOLTZMANN * on * config.rbw);
        floor_off.push(BOLTZMANN * off * config.rbw);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = config.averages as f64;
    let gamma = Gamma::new(shape, 1.0 / shape).map_err(|e| Error::Argument(e.to_string()))?;
    let mut on_w: Vec<f64> = floor_on.iter().map(|p| p * gamma.sample(&mut rng)).collect();
    let mut off_w: Vec<f64> = floor_off.iter().map(|p| p * gamma.sample(&mut rng)).collect();

    let pilot_pair = gain_pair_at(cavity, drive, ss.photons, 2.0 * PI * (pilot.frequency - drive.f_pump))?;
    let pilot_bin = bin_of(pilot.frequency).expect("pilot checked to be in span");
    on_w[pilot_bin] += chain.eta_s * pilot_pair.g_s.norm_sqr() * pilot.power;
    off_w[pilot_bin] += chain.eta_off() * pilot.power;
    if let Some(b) = bin_of(2.0 * drive.f_pump - pilot.frequency) {
        on_w[b] += chain.eta_s * pilot_pair.g_i.norm_sqr() * pilot.power;
    }
    if let Some(b) = bin_of(drive.f_pump) {
        let shifted = 2.0 * PI * (drive.f_pump - cavity.f_r) - 0.5 * cavity.kerr * ss.photons;
        let leak = reflection(shifted, cavity.kappa_i, cavity.kappa_ex).norm_sqr();
        on_w[b] += chain.eta_s * leak * drive.power;
    }

    let to_trace = |w: &[f64]| -> Result<SpectrumTrace> {
        SpectrumTrace::new(freqs.clone(), w.iter().map(|&p| watts_to_dbm(p)).collect(), config.rbw)
    };
    let on = to_trace(&on_w)?
        .with_pump(true, Some(drive.f_pump))
        .with_pilot(pilot.frequency, Some(watts_to_dbm(pilot.power)));
    let off = to_trace(&off_w)?
        .with_pump(false, None)
        .with_pilot(pilot.frequency, Some(watts_to_dbm(pilot.power)));
    Ok(SpectrumPair { on, off })
}
