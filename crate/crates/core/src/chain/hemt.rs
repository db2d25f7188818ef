use nalgebra::DMatrix;

use crate::constants::{BOLTZMANN, PLANCK};
use crate::error::{Error, Result};
use crate::lsq::linear_lsq;

pub const MIN_CALIBRATION_POINTS: usize = 4;

/// Symmetrised noise temperature `(hf/2k_B) coth(hf/2k_B T)`, K.
pub fn callen_welton_temperature(t: f64, frequency: f64) -> Result<f64> {
    if !(t >= 0.0) || !(frequency >= 0.0) {
        return Err(Error::Domain(format!("need T >= 0 and f >= 0, got {t}, {frequency}")));
    }
    let v = 0.5 * PLANCK * frequency / BOLTZMANN;
    if t == 0.0 {
        return Ok(v);
    }
    if v == 0.0 {
        return Ok(t);
    }
    let x = v / t;
    // coth(x)·v = t·x·coth(x); x·coth(x) → 1 + x²/3 for small x.
    if x < 1e-4 {
        return Ok(t * (1.0 + x * x / 3.0));
    }
    Ok(v / x.tanh())
}

/// HEMT noise referred to the reference plane, from a thermal sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HemtCalibration {
    /// K.
    pub t_hemt_mc: f64,
    pub sigma_t_hemt_mc: f64,
    /// Detected power per kelvin (in the units of the sweep).
    pub gain_scale: f64,
    pub sigma_gain_scale: f64,
}

/// Fits `psd = g · (T_cw(T_set) + T_add)` to `(T_set, psd)` pairs and returns
/// `T_add` as the HEMT noise.
pub fn fit_hemt_calibration(sweep: &[(f64, f64)], frequency: f64) -> Result<HemtCalibration> {
    if sweep.len() < MIN_CALIBRATION_POINTS {
        return Err(Error::Argument(format!(
            "need at least {MIN_CALIBRATION_POINTS} temperature points, got {}",
            sweep.len()
        )));
    }
    let cw = sweep
        .iter()
        .map(|p| callen_welton_temperature(p.0, frequency))
        .collect::<Result<Vec<_>>>()?;
    let v = 0.5 * PLANCK * frequency / BOLTZMANN;
    let lo = cw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = cw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 1e-3 * v.max(1e-3 * hi) {
        return Err(Error::Unidentifiable(
            "every point is in the vacuum-saturated regime; the slope is undetermined".into(),
        ));
    }
    let design = DMatrix::from_fn(sweep.len(), 2, |i, j| if j == 0 { cw[i] } else { 1.0 });
    let y: Vec<f64> = sweep.iter().map(|p| p.1).collect();
    let fit = linear_lsq(&design, &y, None)?;
    let (g, b) = (fit.coef[0], fit.coef[1]);
    if !(g > 0.0) {
        return Err(Error::FitRejected(format!("fitted gain scale {g:e} is not positive")));
    }
    let t_add = b / g;
    let (vg, vb, cgb) = (fit.covariance[(0, 0)], fit.covariance[(1, 1)], fit.covariance[(0, 1)]);
    let var = (vb / (g * g) + b * b * vg / g.powi(4) - 2.0 * b * cgb / g.powi(3)).max(0.0);
    Ok(HemtCalibration {
        t_hemt_mc: t_add,
        sigma_t_hemt_mc: var.sqrt(),
        gain_scale: g,
        sigma_gain_scale: vg.max(0.0).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn callen_welton_limits() {
        let f = 6e9;
        let hf_k = PLANCK * f / BOLTZMANN;
        let t = 50.0 * hf_k;
        assert!((callen_welton_temperature(t, f).unwrap() / t - 1.0).abs() < 1e-3);
        assert!((callen_welton_temperature(0.0, f).unwrap() - 0.144).abs() < 5e-4);
        assert_eq!(callen_welton_temperature(0.3, 0.0).unwrap(), 0.3);
        assert!((callen_welton_temperature(0.3, 1.0).unwrap() - 0.3).abs() < 1e-12);
    }

    fn sweep(t_add: f64, g: f64, f: f64, temps: &[f64]) -> Vec<(f64, f64)> {
        temps
            .iter()
            .map(|&t| (t, g * (callen_welton_temperature(t, f).unwrap() + t_add)))
            .collect()
    }

    #[test]
    fn recovers_t_add() {
        let temps = [0.01, 0.05, 0.1, 0.2, 0.4, 0.7, 1.0];
        let cal = fit_hemt_calibration(&sweep(1.61, 3.2, 5.9e9, &temps), 5.9e9).unwrap();
        assert!((cal.t_hemt_mc / 1.61 - 1.0).abs() < 1e-2);
        let zero = fit_hemt_calibration(&sweep(0.0, 3.2, 5.9e9, &temps), 5.9e9).unwrap();
        assert!(zero.t_hemt_mc.abs() < 1e-9);
    }

    #[test]
    fn saturated_sweep_unidentifiable() {
        let temps = [0.005, 0.008, 0.01, 0.012];
        assert!(matches!(
            fit_hemt_calibration(&sweep(1.61, 1.0, 5.9e9, &temps), 5.9e9),
            Err(Error::Unidentifiable(_))
        ));
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            fit_hemt_calibration(&sweep(1.0, 1.0, 5.9e9, &[0.1, 0.5, 1.0]), 5.9e9),
            Err(Error::Argument(_))
        ));
    }

    proptest! {
        #[test]
        fn classical_limit_matches_linear_intercept(t_add in 0.0f64..5.0, g in 0.1f64..10.0) {
            let f = 0.1e9;
            let temps = [1.0, 1.5, 2.0, 3.0, 4.0];
            let data = sweep(t_add, g, f, &temps);
            let cal = fit_hemt_calibration(&data, f).unwrap();
            let design = DMatrix::from_fn(temps.len(), 2, |i, j| if j == 0 { temps[i] } else { 1.0 });
            let y: Vec<f64> = data.iter().map(|p| p.1).collect();
            let plain = linear_lsq(&design, &y, None).unwrap();
            let intercept = plain.coef[1] / plain.coef[0];
            prop_assert!((cal.t_hemt_mc - intercept).abs() <= 0.01 * intercept.abs().max(0.05));
        }
    }
}
