use serde::{Deserialize, Serialize};

use crate::circuit::{kappa_ex_model, kappa_i_model, CircuitModel, JunctionState};
use crate::error::{Error, Result};

/// Gate voltage to Josephson inductance, linearly interpolated between
/// table entries and constant beyond them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateMap {
    table: Vec<(f64, f64)>,
}

impl GateMap {
    /// `table` holds `(V_g, L_J)` pairs with strictly increasing voltage and
    /// positive, non-increasing inductance.
    pub fn new(table: Vec<(f64, f64)>) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::Argument("empty gate map".into()));
        }
        if table
            .iter()
            .any(|p| !p.0.is_finite() || !(p.1 > 0.0) || !p.1.is_finite())
        {
            return Err(Error::Domain("inductances must be positive and finite".into()));
        }
        if table.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Validation("gate voltages must increase".into()));
        }
        if table.windows(2).any(|w| w[1].1 > w[0].1) {
            return Err(Error::Validation(
                "inductance must not increase with gate voltage".into(),
            ));
        }
        Ok(Self { table })
    }

    /// Pinch-off curve `L(V) = L_open + (L_pinch − L_open) exp(−(V − V_p)/w)`
    /// for `V ≥ V_p`, flat at `L_pinch` below, sampled at `samples` points
    /// on `[V_p, v_max]`.
    pub fn saturating_exponential(
        v_pinch: f64,
        v_max: f64,
        width: f64,
        l_pinch: f64,
        l_open: f64,
        samples: usize,
    ) -> Result<Self> {
        if !(v_max > v_pinch) || !(width > 0.0) || samples < 2 || !(l_pinch >= l_open) {
            return Err(Error::Argument("invalid pinch-off parameters".into()));
        }
        let table = (0..samples)
            .map(|i| {
                let v = v_pinch + (v_max - v_pinch) * i as f64 / (samples - 1) as f64;
                (v, l_open + (l_pinch - l_open) * (-(v - v_pinch) / width).exp())
            })
            .collect();
        Self::new(table)
    }

    /// Default map for `model`: the resonance runs from 4 GHz at pinch-off
    /// (−3 V and below) towards 6 GHz when open (0 V).
    pub fn default_for(model: &CircuitModel) -> Result<Self> {
        let l_pinch = JunctionState::from_resonance(4.0e9, model)?.l_j;
        let l_open = JunctionState::from_resonance(6.0e9_f64.min(0.99 * model.f0), model)?.l_j;
        Self::saturating_exponential(-3.0, 0.0, 0.4, l_pinch, l_open, 121)
    }

    pub fn table(&self) -> &[(f64, f64)] {
        &self.table
    }

    /// H.
    pub fn inductance(&self, v: f64) -> f64 {
        let t = &self.table;
        let i = t.partition_point(|p| p.0 <= v);
        if i == 0 {
            return t[0].1;
        }
        if i == t.len() {
            return t[t.len() - 1].1;
        }
        let (a, b) = (t[i - 1], t[i]);
        a.1 + (v - a.0) / (b.0 - a.0) * (b.1 - a.1)
    }
}

/// One row of a synthetic gate sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateSweepRow {
    /// V.
    pub gate_voltage: f64,
    /// Hz.
    pub f_r: f64,
    /// s⁻¹.
    pub kappa_i: f64,
    /// s⁻¹.
    pub kappa_ex: f64,
}

pub fn synth_gate_sweep(map: &GateMap, model: &CircuitModel, voltages: &[f64]) -> Result<Vec<GateSweepRow>> {
    voltages
        .iter()
        .map(|&v| {
            let s = JunctionState::from_inductance(map.inductance(v), model)?;
            Ok(GateSweepRow {
                gate_voltage: v,
                f_r: s.f_r,
                kappa_i: kappa_i_model(&s, model),
                kappa_ex: kappa_ex_model(&s, model),
            })
        })
        .collect()
}
