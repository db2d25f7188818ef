//! Lumped-element model of a half-wave resonator with a junction (parallel
//! `L_J ‖ R_J`) at its centre, coupled to a port through `C_k`.
//!
//! Each half of the resonator is a line section of length `l` that is a
//! quarter wave at the bare frequency `f0`. The mode argument `kl` follows
//! from the junction inductance through `2 cot(kl) = (L_J / L_l l) · kl`, and
//! the effective capacitance, resistance and inductance of the mode follow
//! from `kl`.

mod band;
mod fit;

use std::f64::consts::{FRAC_PI_2, PI};

use crate::constants::PORT_IMPEDANCE;
use crate::error::{Error, Result};
use crate::roots::bisect_newton;

pub use band::{
    band_evaluate, coupling_predictor, dissipation_predictor, f0_grid, fit_dissipation_band, kerr_predictor,
    BandFailure, DissipationBand, Envelope,
};
pub use fit::{fit_coupling, fit_dissipation, CouplingFit, DissipationFit};

/// Lower end of the root bracket for the mode equation, rad.
pub const KL_BRACKET_FLOOR: f64 = 1e-9;

/// Bare-resonator and junction-embedding parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitModel {
    /// Designed geometric resonance, Hz.
    pub f_geo: f64,
    /// Bare resonance with `L_J = 0`, Hz.
    pub f0: f64,
    /// Characteristic impedance, Ω.
    pub z0: f64,
    /// Attenuation constant times section length.
    pub alpha_l: f64,
    /// Junction shunt resistance, Ω. `f64::INFINITY` means lossless.
    pub r_j: f64,
    /// Coupling capacitance, F.
    pub c_k: f64,
}

impl CircuitModel {
    pub fn new(f_geo: f64, f0: f64, z0: f64) -> Result<Self> {
        if !(f0 > 0.0) || !(f_geo >= f0) {
            return Err(Error::Domain(format!(
                "need 0 < f0 <= f_geo, got f0 = {f0}, f_geo = {f_geo}"
            )));
        }
        if !(z0 > 0.0) {
            return Err(Error::Domain(format!("Z0 must be positive, got {z0}")));
        }
        Ok(Self {
            f_geo,
            f0,
            z0,
            alpha_l: 0.0,
            r_j: f64::INFINITY,
            c_k: 0.0,
        })
    }

    /// Model whose impedance scales with the kinetic-inductance frequency
    /// drop: `Z0 = 50 Ω · f_geo / f0`.
    pub fn with_kinetic_scaling(f_geo: f64, f0: f64) -> Result<Self> {
        Self::new(f_geo, f0, PORT_IMPEDANCE * f_geo / f0)
    }

    pub fn with_loss(mut self, alpha_l: f64, r_j: f64) -> Result<Self> {
        if !(alpha_l >= 0.0) || !(r_j > 0.0) {
            return Err(Error::Domain(format!(
                "need alpha_l >= 0 and R_J > 0, got {alpha_l}, {r_j}"
            )));
        }
        self.alpha_l = alpha_l;
        self.r_j = r_j;
        Ok(self)
    }

    pub fn with_coupling(mut self, c_k: f64) -> Result<Self> {
        if !(c_k >= 0.0) {
            return Err(Error::Domain(format!("C_k must be >= 0, got {c_k}")));
        }
        self.c_k = c_k;
        Ok(self)
    }

    /// Same model with a different bare frequency (impedance rescaled).
    pub fn at_bare_frequency(&self, f0: f64) -> Result<Self> {
        let m = Self::with_kinetic_scaling(self.f_geo, f0)?;
        Ok(Self {
            alpha_l: self.alpha_l,
            r_j: self.r_j,
            c_k: self.c_k,
            ..m
        })
    }

    /// Per-section capacitance `C_l l = 1/(4 f0 Z0)`, F.
    pub fn section_capacitance(&self) -> f64 {
        1.0 / (4.0 * self.f0 * self.z0)
    }

    /// Per-section inductance `L_l l = Z0/(4 f0)`, H.
    pub fn section_inductance(&self) -> f64 {
        self.z0 / (4.0 * self.f0)
    }
}

/// Mode quantities derived from `kl` for a given circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionState {
    /// Mode argument per half-section, rad.
    pub kl: f64,
    /// Josephson inductance, H.
    pub l_j: f64,
    /// Normalised flux drop across the junction.
    pub delta_u_bar: f64,
    /// F.
    pub c_eff: f64,
    /// H.
    pub l_eff: f64,
    /// Ω; infinite when the flux drop vanishes.
    pub r_eff: f64,
    /// Hz.
    pub f_r: f64,
}

impl JunctionState {
    pub fn from_kl(kl: f64, model: &CircuitModel) -> Result<Self> {
        let delta_u_bar = flux_drop(kl)?;
        let c_eff = effective_capacitance(kl, model.section_capacitance())?;
        let l_j = if delta_u_bar == 0.0 {
            0.0
        } else {
            model.section_inductance() * 2.0 / (kl.tan() * kl)
        };
        let f_r = model.f0 * kl / FRAC_PI_2;
        let r_eff = if delta_u_bar == 0.0 {
            f64::INFINITY
        } else {
            model.r_j / (delta_u_bar * delta_u_bar)
        };
        Ok(Self {
            kl,
            l_j,
            delta_u_bar,
            c_eff,
            l_eff: 1.0 / (4.0 * PI * PI * f_r * f_r * c_eff),
            r_eff,
            f_r,
        })
    }

    /// State implied by a measured resonant frequency.
    pub fn from_resonance(f_r: f64, model: &CircuitModel) -> Result<Self> {
        Self::from_kl(kl_from_fr(f_r, model.f0)?, model)
    }

    /// State produced by a given junction inductance.
    pub fn from_inductance(l_j: f64, model: &CircuitModel) -> Result<Self> {
        Self::from_kl(solve_kl(l_j / model.section_inductance())?, model)
    }
}

/// Mode argument from the measured resonance, `kl = (π/2) f_r/f0`.
pub fn kl_from_fr(f_r: f64, f0: f64) -> Result<f64> {
    if !(f_r > 0.0) || !(f0 > 0.0) {
        return Err(Error::Domain(format!("frequencies must be positive ({f_r}, {f0})")));
    }
    if f_r > f0 {
        return Err(Error::Domain(format!(
            "resonance {f_r:e} Hz above the bare frequency {f0:e} Hz"
        )));
    }
    Ok(if f_r == f0 { FRAC_PI_2 } else { FRAC_PI_2 * (f_r / f0) })
}

/// Root of `2 cot(kl) = r · kl` on `(0, π/2]` for inductance ratio
/// `r = L_J / (L_l l)`.
pub fn solve_kl(r: f64) -> Result<f64> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("inductance ratio must be >= 0, got {r}")));
    }
    // Multiply through by sin(kl) > 0 to keep the function finite at the ends.
    let g = |x: f64| 2.0 * x.cos() - r * x * x.sin();
    let dg = |x: f64| -(2.0 + r) * x.sin() - r * x * x.cos();
    if g(FRAC_PI_2) >= 0.0 {
        return Ok(FRAC_PI_2);
    }
    bisect_newton(g, dg, KL_BRACKET_FLOOR, FRAC_PI_2, 1e-14)
}

fn check_kl(kl: f64) -> Result<()> {
    if !(kl > 0.0 && kl <= FRAC_PI_2) {
        return Err(Error::Domain(format!("kl = {kl} outside (0, π/2]")));
    }
    Ok(())
}

/// `C_eff = C_l l (1 + sinc(2 kl))` with `sinc(x) = sin(x)/x`.
pub fn effective_capacitance(kl: f64, c_section: f64) -> Result<f64> {
    check_kl(kl)?;
    Ok(c_section * (1.0 + sinc(2.0 * kl)))
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Normalised flux drop `2 cos(kl)`; exactly zero at `kl = π/2`.
pub fn flux_drop(kl: f64) -> Result<f64> {
    check_kl(kl)?;
    if kl == FRAC_PI_2 {
        return Ok(0.0);
    }
    Ok(2.0 * kl.cos())
}

/// Internal loss rate `κ_i = αl/(Z0 C_eff) + 1/(R_eff C_eff)`, s⁻¹.
pub fn kappa_i_model(state: &JunctionState, model: &CircuitModel) -> f64 {
    let line = model.alpha_l / (model.z0 * state.c_eff);
    if state.r_eff.is_infinite() {
        line
    } else {
        line + 1.0 / (state.r_eff * state.c_eff)
    }
}

/// External coupling rate `κ_ex = 1/(R* C_eff)` with
/// `R* = (1 + ω² C_k² Z0²)/(ω² C_k² Z0)`, s⁻¹.
pub fn kappa_ex_model(state: &JunctionState, model: &CircuitModel) -> f64 {
    let w = 2.0 * PI * state.f_r;
    let x = w * model.c_k * model.z0;
    if x == 0.0 {
        return 0.0;
    }
    x * x / (model.z0 * (1.0 + x * x) * state.c_eff)
}
