use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::{CircuitModel, JunctionState};
use crate::error::{Error, Result};
use crate::lsq::{levenberg_marquardt, nonneg_lsq, LmOptions};

/// Flux drops below this are treated as a bare resonator.
const NEGLIGIBLE_FLUX_DROP: f64 = 1e-6;

/// Line loss and junction shunt resistance fitted to `(f_r, κ_i)` data.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationFit {
    pub alpha_l: f64,
    pub sigma_alpha_l: f64,
    /// Ω; infinite when the junction term is unresolved or pinned at zero.
    pub r_j: f64,
    /// Ω; infinite when `r_j` is unidentifiable.
    pub sigma_r_j: f64,
    /// RMS of the unweighted residuals, s⁻¹.
    pub residual_rms: f64,
}

/// Coupling capacitance fitted to `(f_r, κ_ex)` data.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingFit {
    /// F.
    pub c_k: f64,
    pub sigma_c_k: f64,
    pub residual_rms: f64,
}

fn check_points(points: &[(f64, f64)], sigmas: Option<&[f64]>, model: &CircuitModel) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Argument("no data points".into()));
    }
    if let Some(s) = sigmas {
        if s.len() != points.len() {
            return Err(Error::Argument(format!(
                "{} uncertainties for {} points",
                s.len(),
                points.len()
            )));
        }
        if s.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::Argument("uncertainties must be positive".into()));
        }
    }
    if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::Argument("non-finite data point".into()));
    }
    let fmax = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if fmax > model.f0 {
        return Err(Error::Domain(format!(
            "resonance {fmax:e} Hz above the bare frequency {:e} Hz",
            model.f0
        )));
    }
    Ok(())
}

fn distinct_frequencies(points: &[(f64, f64)]) -> usize {
    let mut f: Vec<f64> = points.iter().map(|p| p.0).collect();
    f.sort_by(|a, b| a.partial_cmp(b).unwrap());
    f.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    f.len()
}

/// Fits `κ_i = αl/(Z0 C_eff) + Δū²/(R_J C_eff)` with both terms constrained
/// non-negative. The model's `f0` and `Z0` fix the embedding; its loss
/// fields are ignored.
///
/// `sigmas` switches from unweighted to inverse-variance weighting.
pub fn fit_dissipation(points: &[(f64, f64)], model: &CircuitModel, sigmas: Option<&[f64]>) -> Result<DissipationFit> {
    check_points(points, sigmas, model)?;
    if points.len() < 3 || distinct_frequencies(points) < 2 {
        return Err(Error::Unidentifiable(format!(
            "two parameters need at least 3 points at distinct frequencies, got {}",
            points.len()
        )));
    }
    let states = points
        .iter()
        .map(|p| JunctionState::from_resonance(p.0, model))
        .collect::<Result<Vec<_>>>()?;
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let weights: Option<Vec<f64>> = sigmas.map(|s| s.iter().map(|x| 1.0 / (x * x)).collect());
    let junction_resolved = states.iter().any(|s| s.delta_u_bar > NEGLIGIBLE_FLUX_DROP);

    let ncol = if junction_resolved { 2 } else { 1 };
    let design = DMatrix::from_fn(points.len(), ncol, |i, j| match j {
        0 => 1.0 / (model.z0 * states[i].c_eff),
        _ => states[i].delta_u_bar.powi(2) / states[i].c_eff,
    });
    let fit = nonneg_lsq(&design, &y, weights.as_deref())?;
    let residual_rms = {
        let ss: f64 = (0..points.len())
            .map(|i| {
                let pred: f64 = (0..ncol).map(|j| design[(i, j)] * fit.coef[j]).sum();
                (y[i] - pred).powi(2)
            })
            .sum();
        (ss / points.len() as f64).sqrt()
    };

    let (r_j, sigma_r_j) = if junction_resolved && fit.coef[1] > 0.0 {
        let g = fit.coef[1];
        (1.0 / g, fit.sigma(1) / (g * g))
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(DissipationFit {
        alpha_l: fit.coef[0],
        sigma_alpha_l: fit.sigma(0),
        r_j,
        sigma_r_j,
        residual_rms,
    })
}

fn coupling_rate(f_r: f64, c_eff: f64, c_k: f64, z0: f64) -> f64 {
    let x = 2.0 * PI * f_r * c_k * z0;
    x * x / (z0 * (1.0 + x * x) * c_eff)
}

/// Fits `C_k` in `κ_ex = ω² C_k² Z0 / ((1 + ω² C_k² Z0²) C_eff)`.
pub fn fit_coupling(points: &[(f64, f64)], model: &CircuitModel, sigmas: Option<&[f64]>) -> Result<CouplingFit> {
    check_points(points, sigmas, model)?;
    let states = points
        .iter()
        .map(|p| JunctionState::from_resonance(p.0, model))
        .collect::<Result<Vec<_>>>()?;
    let z0 = model.z0;

    // Weak-coupling estimate to set the scale.
    let guess = {
        let s: f64 = points
            .iter()
            .zip(&states)
            .map(|(p, st)| (p.1.max(0.0) * st.c_eff / ((2.0 * PI * p.0).powi(2) * z0)).sqrt())
            .sum();
        s / points.len() as f64
    };
    if !(guess > 0.0) {
        return Ok(CouplingFit {
            c_k: 0.0,
            sigma_c_k: f64::INFINITY,
            residual_rms: 0.0,
        });
    }
    let ymax = points.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let w: Vec<f64> = match sigmas {
        Some(s) => s.iter().map(|x| 1.0 / x).collect(),
        None => vec![1.0 / ymax; points.len()],
    };
    let residuals = |q: &[f64]| -> Vec<f64> {
        points
            .iter()
            .zip(&states)
            .zip(&w)
            .map(|((p, st), wi)| (coupling_rate(p.0, st.c_eff, q[0] * guess, z0) - p.1) * wi)
            .collect()
    };
    let opts = LmOptions {
        lower: Some(vec![0.0]),
        ..LmOptions::default()
    };
    let fit = levenberg_marquardt(residuals, &[1.0], &opts)?;
    let c_k = fit.params[0] * guess;
    let mut sigma = fit.sigma(0) * guess;
    if sigmas.is_some() && fit.dof() > 0 {
        // The solver scales the covariance by the reduced chi-square; known
        // uncertainties call for the unscaled form.
        let chi2 = fit.cost / fit.dof() as f64;
        if chi2 > 0.0 {
            sigma /= chi2.sqrt();
        }
    }
    let residual_rms = (points
        .iter()
        .zip(&states)
        .map(|(p, st)| (coupling_rate(p.0, st.c_eff, c_k, z0) - p.1).powi(2))
        .sum::<f64>()
        / points.len() as f64)
        .sqrt();
    Ok(CouplingFit {
        c_k,
        sigma_c_k: sigma,
        residual_rms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{kappa_ex_model, kappa_i_model};

    fn truth() -> CircuitModel {
        CircuitModel::with_kinetic_scaling(7.2e9, 6.2e9)
            .unwrap()
            .with_loss(1e-3, 15e3)
            .unwrap()
            .with_coupling(5e-15)
            .unwrap()
    }

    fn table(m: &CircuitModel) -> Vec<(f64, f64, f64)> {
        (0..21)
            .map(|i| {
                let f = 4.0e9 + 1e8 * i as f64;
                let s = JunctionState::from_resonance(f, m).unwrap();
                (f, kappa_i_model(&s, m), kappa_ex_model(&s, m))
            })
            .collect()
    }

    #[test]
    fn dissipation_round_trip() {
        let m = truth();
        let pts: Vec<(f64, f64)> = table(&m).iter().map(|r| (r.0, r.1)).collect();
        let fit = fit_dissipation(&pts, &m, None).unwrap();
        assert!((fit.alpha_l / 1e-3 - 1.0).abs() < 1e-3);
        assert!((fit.r_j / 15e3 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn coupling_round_trip() {
        let m = truth();
        let pts: Vec<(f64, f64)> = table(&m).iter().map(|r| (r.0, r.2)).collect();
        let fit = fit_coupling(&pts, &m, None).unwrap();
        assert!((fit.c_k / 5e-15 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn too_few_points() {
        let m = truth();
        assert!(matches!(
            fit_dissipation(&[(5e9, 1e6)], &m, None),
            Err(Error::Unidentifiable(_))
        ));
        assert!(matches!(fit_coupling(&[], &m, None), Err(Error::Argument(_))));
    }

    #[test]
    fn bare_points_leave_r_j_unbounded() {
        let m = truth();
        let pts = vec![(6.2e9, 2e5), (6.2e9 - 1e2, 2e5), (6.2e9 - 2e2, 2e5)];
        let fit = fit_dissipation(&pts, &m, None).unwrap();
        assert!(fit.r_j.is_infinite() && fit.sigma_r_j.is_infinite());
        assert!(fit.alpha_l > 0.0);
    }

    #[test]
    fn resonance_above_f0_rejected() {
        let m = truth();
        let pts = vec![(5e9, 1e6), (6e9, 1e6), (6.3e9, 1e6)];
        assert!(matches!(fit_dissipation(&pts, &m, None), Err(Error::Domain(_))));
    }
}
