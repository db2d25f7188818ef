use rayon::prelude::*;

use super::{
    fit_coupling, fit_dissipation, kappa_ex_model, kappa_i_model, CircuitModel, DissipationFit, JunctionState,
};
use crate::error::{Error, Result};
use crate::kerr::kerr_predict;

/// A bare frequency at which the predictor failed, with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct BandFailure {
    pub f0: f64,
    pub error: Error,
}

/// Pointwise min/max of a predicted quantity over a range of bare
/// frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub abscissa: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// Bare frequencies that contributed.
    pub f0_used: Vec<f64>,
    pub failures: Vec<BandFailure>,
}

impl Envelope {
    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }
}

/// `grid` evenly spaced bare frequencies over `[lo, hi]` (a single value for
/// a degenerate range).
pub fn f0_grid(f0_range: (f64, f64), grid: usize) -> Result<Vec<f64>> {
    let (lo, hi) = f0_range;
    if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
        return Err(Error::Argument(format!("invalid f0 range [{lo}, {hi}]")));
    }
    if grid < 2 {
        return Err(Error::Argument(format!("grid needs at least 2 points, got {grid}")));
    }
    if hi == lo {
        return Ok(vec![lo]);
    }
    Ok((0..grid)
        .map(|i| lo + (hi - lo) * i as f64 / (grid - 1) as f64)
        .collect())
}

/// Evaluates `predictor(f0)` on each bare frequency of the grid (in
/// parallel) and returns the envelope over those that succeed. Every
/// successful evaluation must return one value per abscissa point.
pub fn band_evaluate<F>(abscissa: &[f64], f0_range: (f64, f64), grid: usize, predictor: F) -> Result<Envelope>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    let grid_f0 = f0_grid(f0_range, grid)?;
    let results: Vec<(f64, Result<Vec<f64>>)> = grid_f0.par_iter().map(|&f0| (f0, predictor(f0))).collect();

    let n = abscissa.len();
    let mut min = vec![f64::INFINITY; n];
    let mut max = vec![f64::NEG_INFINITY; n];
    let mut f0_used = Vec::new();
    let mut failures = Vec::new();
    for (f0, r) in results {
        match r {
            Ok(v) if v.len() == n => {
                for (i, &x) in v.iter().enumerate() {
                    min[i] = min[i].min(x);
                    max[i] = max[i].max(x);
                }
                f0_used.push(f0);
            }
            Ok(v) => failures.push(BandFailure {
                f0,
                error: Error::Argument(format!("predictor returned {} values for {n} abscissae", v.len())),
            }),
            Err(error) => failures.push(BandFailure { f0, error }),
        }
    }
    if f0_used.is_empty() {
        return Err(failures
            .into_iter()
            .next()
            .map(|f| f.error)
            .unwrap_or_else(|| Error::Argument("empty f0 grid".into())));
    }
    Ok(Envelope {
        abscissa: abscissa.to_vec(),
        min,
        max,
        f0_used,
        failures,
    })
}

/// Predictor that refits `(αl, R_J)` to `points` at each `f0` and returns
/// `κ_i` at the abscissa frequencies.
pub fn dissipation_predictor<'a>(
    points: &'a [(f64, f64)],
    f_geo: f64,
    abscissa: &'a [f64],
) -> impl Fn(f64) -> Result<Vec<f64>> + Sync + 'a {
    move |f0| {
        let base = CircuitModel::with_kinetic_scaling(f_geo, f0)?;
        let fit = fit_dissipation(points, &base, None)?;
        let m = base.with_loss(fit.alpha_l, fit.r_j)?;
        abscissa
            .iter()
            .map(|&f| JunctionState::from_resonance(f, &m).map(|s| kappa_i_model(&s, &m)))
            .collect()
    }
}

/// Predictor that refits `C_k` to `points` at each `f0` and returns `κ_ex`.
pub fn coupling_predictor<'a>(
    points: &'a [(f64, f64)],
    f_geo: f64,
    abscissa: &'a [f64],
) -> impl Fn(f64) -> Result<Vec<f64>> + Sync + 'a {
    move |f0| {
        let base = CircuitModel::with_kinetic_scaling(f_geo, f0)?;
        let fit = fit_coupling(points, &base, None)?;
        let m = base.with_coupling(fit.c_k)?;
        abscissa
            .iter()
            .map(|&f| JunctionState::from_resonance(f, &m).map(|s| kappa_ex_model(&s, &m)))
            .collect()
    }
}

/// Predictor for the Kerr constant (s⁻¹ per photon) at the abscissa
/// frequencies; nothing is refitted.
pub fn kerr_predictor(f_geo: f64, abscissa: &[f64]) -> impl Fn(f64) -> Result<Vec<f64>> + Sync + '_ {
    move |f0| {
        let m = CircuitModel::with_kinetic_scaling(f_geo, f0)?;
        abscissa
            .iter()
            .map(|&f| JunctionState::from_resonance(f, &m).map(|s| kerr_predict(&s)))
            .collect()
    }
}

/// Junction resistance across the f0 band: a central value with the
/// statistical and systematic (band spread) uncertainties kept apart.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationBand {
    pub per_f0: Vec<(f64, DissipationFit)>,
    /// Midpoint of the fitted R_J range, Ω.
    pub r_j: f64,
    /// Largest covariance uncertainty over the band, Ω.
    pub r_j_statistical: f64,
    /// Half the spread of fitted R_J over the band, Ω.
    pub r_j_systematic: f64,
    pub alpha_l: f64,
    pub alpha_l_systematic: f64,
    pub failures: Vec<BandFailure>,
}

pub fn fit_dissipation_band(
    points: &[(f64, f64)],
    f_geo: f64,
    f0_range: (f64, f64),
    grid: usize,
) -> Result<DissipationBand> {
    let grid_f0 = f0_grid(f0_range, grid)?;
    let results: Vec<(f64, Result<DissipationFit>)> = grid_f0
        .par_iter()
        .map(|&f0| {
            let r = CircuitModel::with_kinetic_scaling(f_geo, f0).and_then(|m| fit_dissipation(points, &m, None));
            (f0, r)
        })
        .collect();
    let mut per_f0 = Vec::new();
    let mut failures = Vec::new();
    for (f0, r) in results {
        match r {
            Ok(fit) => per_f0.push((f0, fit)),
            Err(error) => failures.push(BandFailure { f0, error }),
        }
    }
    if per_f0.is_empty() {
        return Err(failures.remove(0).error);
    }
    let spread = |get: fn(&DissipationFit) -> f64| {
        let lo = per_f0.iter().map(|p| get(&p.1)).fold(f64::INFINITY, f64::min);
        let hi = per_f0.iter().map(|p| get(&p.1)).fold(f64::NEG_INFINITY, f64::max);
        if hi.is_infinite() {
            (f64::INFINITY, f64::INFINITY)
        } else {
            (0.5 * (lo + hi), 0.5 * (hi - lo))
        }
    };
    let (r_j, r_j_systematic) = spread(|f| f.r_j);
    let (alpha_l, alpha_l_systematic) = spread(|f| f.alpha_l);
    let r_j_statistical = per_f0.iter().map(|p| p.1.sigma_r_j).fold(0.0, f64::max);
    Ok(DissipationBand {
        per_f0,
        r_j,
        r_j_statistical,
        r_j_systematic,
        alpha_l,
        alpha_l_systematic,
        failures,
    })
}
