//! Synthetic instrument: a driven Kerr cavity treated semiclassically, used
//! to generate reflection traces, gain maps, output spectra and gate sweeps
//! for closed-loop tests of the fitters.
//!
//! The resonance moves by `K/2` per photon, so the mean-field cubic is
//! `n((κ/2)² + (Δ_p − K n/2)²) = κ_ex P/(h f_p)` with `Δ_p = 2π(f_p − f_r)`.
//! Small fluctuations around the steady state are linearised in the frame
//! rotating at the pump.
//!
//! The gain model is the standard single-mode Kerr amplifier; it is a
//! stand-in that reproduces the sum rule, the zero-pump limit and the
//! bifurcation, not a model of any particular device.

mod gate;
mod synth;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{linear_to_db, PLANCK};
use crate::error::{Error, Result};
use crate::paramp::GainPair;
use crate::resonance::reflection;
use crate::roots::cubic_real_roots;

pub use gate::{synth_gate_sweep, GateMap, GateSweepRow};
pub use synth::{synth_reflection, synth_spectrum, PilotTone, SpectrumConfig, SpectrumPair};

/// Cavity parameters. `kerr` is the angular Kerr constant (s⁻¹).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KerrCavity {
    /// Small-signal resonance, Hz.
    pub f_r: f64,
    pub kappa_i: f64,
    pub kappa_ex: f64,
    pub kerr: f64,
}

impl KerrCavity {
    pub fn new(f_r: f64, kappa_i: f64, kappa_ex: f64, kerr: f64) -> Result<Self> {
        if !(f_r > 0.0) || !(kappa_i >= 0.0) || !(kappa_ex >= 0.0) || !(kappa_i + kappa_ex > 0.0) {
            return Err(Error::Domain("need f_r > 0, non-negative rates and κ > 0".into()));
        }
        if !(kerr <= 0.0) {
            return Err(Error::Domain(format!("Kerr constant must be <= 0, got {kerr}")));
        }
        Ok(Self {
            f_r,
            kappa_i,
            kappa_ex,
            kerr,
        })
    }

    pub fn kappa_total(&self) -> f64 {
        self.kappa_i + self.kappa_ex
    }

    /// Resonance shift per photon, s⁻¹.
    fn shift_per_photon(&self) -> f64 {
        0.5 * self.kerr
    }

    /// Small-signal power reflectance `|Γ|²` at `f`.
    pub fn linear_reflectance(&self, f: f64) -> f64 {
        reflection(2.0 * PI * (f - self.f_r), self.kappa_i, self.kappa_ex).norm_sqr()
    }
}

/// Coherent drive at the device input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpDrive {
    /// Hz.
    pub f_pump: f64,
    /// W.
    pub power: f64,
}

impl PumpDrive {
    pub fn new(f_pump: f64, power: f64) -> Result<Self> {
        if !(f_pump > 0.0) || !(power >= 0.0) {
            return Err(Error::Domain(format!("need f > 0 and P >= 0, got {f_pump}, {power}")));
        }
        Ok(Self { f_pump, power })
    }

    /// `Δ_p = 2π(f_pump − f_r)`, s⁻¹.
    pub fn detuning(&self, cavity: &KerrCavity) -> f64 {
        2.0 * PI * (self.f_pump - cavity.f_r)
    }
}

/// Which steady-state solution to take where the response is bistable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Branch {
    /// Reached by sweeping power upward.
    #[default]
    Low,
    High,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    /// Intracavity photon number on the selected branch.
    pub photons: f64,
    /// Number of real solutions, 1 or 3.
    pub branch_count: usize,
    /// All real solutions, ascending.
    pub solutions: Vec<f64>,
    /// Discriminant of the normalised cubic; positive with three roots.
    pub discriminant: f64,
}

/// Mean-field photon number under `drive`.
pub fn steady_state(cavity: &KerrCavity, drive: &PumpDrive, branch: Branch) -> SteadyState {
    let k = cavity.kappa_total();
    let delta = drive.detuning(cavity);
    let rate = cavity.kappa_ex * drive.power / (PLANCK * drive.f_pump);
    let g = cavity.shift_per_photon();
    if rate == 0.0 {
        return SteadyState {
            photons: 0.0,
            branch_count: 1,
            solutions: vec![0.0],
            discriminant: 0.0,
        };
    }
    if g == 0.0 {
        let n = rate / (0.25 * k * k + delta * delta);
        return SteadyState {
            photons: n,
            branch_count: 1,
            solutions: vec![n],
            discriminant: 0.0,
        };
    }
    // In ξ = g n / κ the cubic is ξ³ − 2δξ² + (1/4 + δ²)ξ − g D/κ³ = 0.
    let d = delta / k;
    let rhs = g * rate / (k * k * k);
    let cubic = cubic_real_roots(1.0, -2.0 * d, 0.25 + d * d, -rhs);
    let mut solutions: Vec<f64> = cubic.roots.iter().map(|xi| (xi * k / g).max(0.0)).collect();
    solutions.sort_by(|a, b| a.total_cmp(b));
    let photons = match branch {
        Branch::Low => solutions[0],
        Branch::High => solutions[solutions.len() - 1],
    };
    SteadyState {
        photons,
        branch_count: if solutions.len() >= 3 { 3 } else { 1 },
        solutions,
        discriminant: cubic.discriminant,
    }
}

/// Onset of bistability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    /// Pump detuning `−√3 κ/2`, s⁻¹.
    pub detuning: f64,
    /// Hz.
    pub pump_frequency: f64,
    pub photons: f64,
    /// W at the device input.
    pub power: f64,
}

/// Critical pump detuning and power of the cavity (requires `K < 0`).
pub fn critical_point(cavity: &KerrCavity) -> Result<CriticalPoint> {
    let g = cavity.shift_per_photon();
    if g == 0.0 {
        return Err(Error::Domain("a linear cavity has no critical point".into()));
    }
    if cavity.kappa_ex == 0.0 {
        return Err(Error::Domain("an uncoupled cavity cannot be pumped".into()));
    }
    let k = cavity.kappa_total();
    let detuning = -(3f64.sqrt()) * k / 2.0;
    let pump_frequency = cavity.f_r + detuning / (2.0 * PI);
    let photons = k / (3f64.sqrt() * g.abs());
    let rate = k * k * k / (3.0 * 3f64.sqrt() * g.abs());
    Ok(CriticalPoint {
        detuning,
        pump_frequency,
        photons,
        power: rate * PLANCK * pump_frequency / cavity.kappa_ex,
    })
}

/// Signal and idler gain for a signal offset `delta` (s⁻¹) from the pump.
///
/// Gains follow the reflection sign convention of
/// [`crate::resonance::reflection_model`]: with the pump off,
/// `g_S = −Γ`.
pub fn gain_pair(cavity: &KerrCavity, drive: &PumpDrive, delta: f64, branch: Branch) -> Result<GainPair> {
    let ss = steady_state(cavity, drive, branch);
    gain_pair_at(cavity, drive, ss.photons, delta)
}

pub(crate) fn gain_pair_at(cavity: &KerrCavity, drive: &PumpDrive, photons: f64, delta: f64) -> Result<GainPair> {
    let k = cavity.kappa_total();
    let g = cavity.shift_per_photon();
    // Fluctuation detuning in the pump frame and the parametric coupling.
    let d = -drive.detuning(cavity) + 2.0 * g * photons;
    let c = g * photons;
    let growth = c * c - d * d;
    if growth >= 0.25 * k * k {
        return Err(Error::Unstable(format!(
            "linear response has a growing mode (rate {:e} s⁻¹)",
            growth.sqrt() - 0.5 * k
        )));
    }
    let i = Complex64::i();
    let m11 = Complex64::new(0.5 * k, 0.0) - i * delta + i * d;
    let m22 = Complex64::new(0.5 * k, 0.0) - i * delta - i * d;
    let m12 = i * c;
    let m21 = -i * c;
    let det = m11 * m22 - m12 * m21;
    let chi11 = m22 / det;
    let chi12 = -m12 / det;
    let g_s = cavity.kappa_ex * chi11 - 1.0;
    let g_i = cavity.kappa_ex * chi12;
    Ok(GainPair {
        g_s: g_s.conj(),
        g_i: g_i.conj(),
        detuning: delta,
    })
}

/// Signal gain (dB) over a grid of pump powers (rows) and pump frequencies
/// (columns) at a fixed signal offset; `None` where the operating point is
/// unstable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainMap {
    /// W.
    pub powers: Vec<f64>,
    /// Hz.
    pub pump_frequencies: Vec<f64>,
    /// Row-major, `powers.len() × pump_frequencies.len()`.
    pub gain_db: Vec<Option<f64>>,
    /// Hz.
    pub signal_offset: f64,
}

impl GainMap {
    pub fn at(&self, row: usize, col: usize) -> Option<f64> {
        self.gain_db[row * self.pump_frequencies.len() + col]
    }

    pub fn max_gain_db(&self) -> Option<f64> {
        self.gain_db.iter().flatten().copied().reduce(f64::max)
    }
}

pub fn gain_map(
    cavity: &KerrCavity,
    powers: &[f64],
    pump_frequencies: &[f64],
    signal_offset: f64,
    branch: Branch,
) -> Result<GainMap> {
    let drives = powers
        .iter()
        .flat_map(|&p| pump_frequencies.iter().map(move |&f| PumpDrive::new(f, p)))
        .collect::<Result<Vec<_>>>()?;
    let gain_db = drives
        .par_iter()
        .map(|d| {
            gain_pair(cavity, d, 2.0 * PI * signal_offset, branch)
                .ok()
                .map(|g| linear_to_db(g.signal_gain()))
        })
        .collect();
    Ok(GainMap {
        powers: powers.to_vec(),
        pump_frequencies: pump_frequencies.to_vec(),
        gain_db,
        signal_offset,
    })
}
