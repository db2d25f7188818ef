//! Least-squares machinery: a bounded Levenberg–Marquardt solver with
//! finite-difference Jacobians, and small (non-negative) linear solvers.
//!
//! Callers are expected to pass parameters scaled to order unity; the
//! finite-difference step and the convergence tests assume that.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when the relative cost reduction of an accepted step falls below this.
    pub ftol: f64,
    /// Stop when the step norm falls below `xtol * (|p| + xtol)`.
    pub xtol: f64,
    /// Optional per-parameter lower bounds enforced by projection.
    pub lower: Option<Vec<f64>>,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            ftol: 1e-15,
            xtol: 1e-13,
            lower: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmFit {
    pub params: Vec<f64>,
    /// Sum of squared residuals at the optimum.
    pub cost: f64,
    /// Parameter covariance `s² (JᵀJ)⁻¹` with `s² = cost / (m − n)`.
    pub covariance: DMatrix<f64>,
    pub jacobian: DMatrix<f64>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

impl LmFit {
    pub fn sigma(&self, i: usize) -> f64 {
        self.covariance[(i, i)].max(0.0).sqrt()
    }

    pub fn dof(&self) -> usize {
        self.residuals.len().saturating_sub(self.params.len())
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

fn project(p: &mut [f64], lower: Option<&Vec<f64>>) {
    if let Some(lo) = lower {
        for (x, l) in p.iter_mut().zip(lo) {
            if *x < *l {
                *x = *l;
            }
        }
    }
}

/// Central-difference Jacobian, one column per parameter.
pub fn numeric_jacobian<F>(f: &F, p: &[f64], r0_len: usize) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = p.len();
    let mut jac = DMatrix::zeros(r0_len, n);
    let mut work = p.to_vec();
    for j in 0..n {
        let h = 1e-6 * p[j].abs().max(1e-3);
        work[j] = p[j] + h;
        let up = f(&work);
        work[j] = p[j] - h;
        let down = f(&work);
        work[j] = p[j];
        for i in 0..r0_len {
            jac[(i, j)] = (up[i] - down[i]) / (2.0 * h);
        }
    }
    jac
}

fn covariance_from(jac: &DMatrix<f64>, cost: f64) -> DMatrix<f64> {
    let (m, n) = jac.shape();
    let jtj = jac.transpose() * jac;
    let s2 = if m > n { cost / (m - n) as f64 } else { f64::INFINITY };
    match jtj.clone().try_inverse() {
        Some(inv) => inv * s2,
        None => DMatrix::from_element(n, n, f64::INFINITY),
    }
}

/// Minimise `Σ r_i(p)²` starting from `p0`.
pub fn levenberg_marquardt<F>(residuals: F, p0: &[f64], opts: &LmOptions) -> Result<LmFit>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = p0.len();
    let mut p = p0.to_vec();
    project(&mut p, opts.lower.as_ref());
    let mut r = residuals(&p);
    let m = r.len();
    if m < n {
        return Err(Error::Argument(format!(
            "{m} residuals cannot determine {n} parameters"
        )));
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("residuals not finite at the initial guess".into()));
    }
    let mut cost = sum_sq(&r);
    let initial_cost = cost;
    let mut jac = numeric_jacobian(&residuals, &p, m);
    let mut lambda = {
        let jtj = jac.transpose() * &jac;
        1e-3 * (0..n).map(|i| jtj[(i, i)]).fold(0.0, f64::max).max(1e-12)
    };

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        if cost <= 1e-30 * initial_cost.max(1e-300) {
            converged = true;
            break;
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let grad = &jt * DVector::from_column_slice(&r);
        if grad.amax() <= 1e-300 {
            converged = true;
            break;
        }

        let mut accepted = false;
        while lambda < 1e20 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-30);
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => {
                    lambda *= 4.0;
                    continue;
                }
            };
            let mut trial: Vec<f64> = p.iter().zip(step.iter()).map(|(x, d)| x + d).collect();
            project(&mut trial, opts.lower.as_ref());
            let r_trial = residuals(&trial);
            let c_trial = sum_sq(&r_trial);
            if c_trial.is_finite() && c_trial < cost {
                let step_norm: f64 = trial.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                let p_norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
                let rel = (cost - c_trial) / cost;
                p = trial;
                r = r_trial;
                cost = c_trial;
                lambda = (lambda / 3.0).max(1e-15);
                accepted = true;
                if rel < opts.ftol || step_norm < opts.xtol * (p_norm + opts.xtol) {
                    converged = true;
                }
                break;
            }
            lambda *= 2.0;
        }
        if !accepted {
            // No downhill direction at any damping: local minimum to working precision.
            converged = true;
        }
        jac = numeric_jacobian(&residuals, &p, m);
        if converged {
            break;
        }
    }

    if !converged {
        return Err(Error::Convergence {
            message: format!("cost {cost:e} still decreasing"),
            iterations,
            best: p,
        });
    }
    let covariance = covariance_from(&jac, cost);
    Ok(LmFit {
        params: p,
        cost,
        covariance,
        jacobian: jac,
        residuals: r,
        iterations,
    })
}

/// Result of a small linear least-squares problem.
#[derive(Debug, Clone)]
pub struct LinearFit {
    pub coef: Vec<f64>,
    pub covariance: DMatrix<f64>,
    /// Weighted sum of squared residuals.
    pub cost: f64,
    /// Which coefficients were free (not pinned at zero by the bound).
    pub free: Vec<bool>,
}

impl LinearFit {
    pub fn sigma(&self, i: usize) -> f64 {
        self.covariance[(i, i)].max(0.0).sqrt()
    }
}

/// Weighted linear least squares `y ≈ X c` on the columns flagged `free`.
/// Pinned columns get coefficient 0 and zero variance.
///
/// With `weights` absent the covariance is scaled by the residual variance;
/// with inverse-variance weights it is `(XᵀWX)⁻¹` as is.
fn solve_subset(design: &DMatrix<f64>, y: &[f64], weights: Option<&[f64]>, free: &[bool]) -> Option<LinearFit> {
    let (m, n) = design.shape();
    let cols: Vec<usize> = (0..n).filter(|&j| free[j]).collect();
    let k = cols.len();
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let mut coef = vec![0.0; n];
    let mut covariance = DMatrix::zeros(n, n);
    if k > 0 {
        // Column equilibration keeps the normal matrix well conditioned when
        // the regressors differ by many orders of magnitude.
        let scale: Vec<f64> = cols
            .iter()
            .map(|&j| {
                let s = (0..m).map(|i| design[(i, j)].powi(2)).sum::<f64>().sqrt();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        let mut xs = DMatrix::zeros(m, k);
        let mut ys = DVector::zeros(m);
        for i in 0..m {
            let sw = w(i).sqrt();
            for (a, &j) in cols.iter().enumerate() {
                xs[(i, a)] = design[(i, j)] * sw / scale[a];
            }
            ys[i] = y[i] * sw;
        }
        let svd = xs.clone().svd(true, true);
        let smax = svd.singular_values.max();
        if svd.singular_values.min() <= 1e-13 * smax {
            return None;
        }
        let sol = svd.solve(&ys, 1e-300).ok()?;
        let xtx_inv = (xs.transpose() * &xs).try_inverse()?;
        for (a, &j) in cols.iter().enumerate() {
            coef[j] = sol[a] / scale[a];
        }
        let mut cost = 0.0;
        for i in 0..m {
            let pred: f64 = (0..n).map(|j| design[(i, j)] * coef[j]).sum();
            cost += w(i) * (y[i] - pred).powi(2);
        }
        let s2 = if weights.is_some() {
            1.0
        } else if m > k {
            cost / (m - k) as f64
        } else {
            f64::INFINITY
        };
        for (a, &ja) in cols.iter().enumerate() {
            for (b, &jb) in cols.iter().enumerate() {
                covariance[(ja, jb)] = xtx_inv[(a, b)] * s2 / (scale[a] * scale[b]);
            }
        }
        return Some(LinearFit {
            coef,
            covariance,
            cost,
            free: free.to_vec(),
        });
    }
    let cost = (0..m).map(|i| w(i) * y[i] * y[i]).sum();
    Some(LinearFit {
        coef,
        covariance,
        cost,
        free: free.to_vec(),
    })
}

/// Unconstrained weighted linear least squares.
pub fn linear_lsq(design: &DMatrix<f64>, y: &[f64], weights: Option<&[f64]>) -> Result<LinearFit> {
    check_shapes(design, y, weights)?;
    let free = vec![true; design.ncols()];
    solve_subset(design, y, weights, &free)
        .ok_or_else(|| Error::Unidentifiable("design matrix is rank deficient".into()))
}

/// Linear least squares with every coefficient constrained to be ≥ 0.
///
/// Exhaustive active-set search; meant for the two- or three-parameter
/// models in this crate, not for large problems.
pub fn nonneg_lsq(design: &DMatrix<f64>, y: &[f64], weights: Option<&[f64]>) -> Result<LinearFit> {
    check_shapes(design, y, weights)?;
    let n = design.ncols();
    assert!(n <= 8, "exhaustive NNLS is limited to small problems");
    let mut best: Option<LinearFit> = None;
    for mask in 0..(1usize << n) {
        let free: Vec<bool> = (0..n).map(|j| mask & (1 << j) != 0).collect();
        let Some(fit) = solve_subset(design, y, weights, &free) else {
            continue;
        };
        if fit.coef.iter().any(|&c| c < 0.0) {
            continue;
        }
        let better = best.as_ref().is_none_or(|b| {
            fit.cost < b.cost * (1.0 - 1e-12)
                || (fit.cost <= b.cost * (1.0 + 1e-12) && free_count(&fit) > free_count(b))
        });
        if better {
            best = Some(fit);
        }
    }
    best.ok_or_else(|| Error::Unidentifiable("no feasible non-negative solution".into()))
}

fn free_count(f: &LinearFit) -> usize {
    f.free.iter().filter(|&&x| x).count()
}

fn check_shapes(design: &DMatrix<f64>, y: &[f64], weights: Option<&[f64]>) -> Result<()> {
    if design.nrows() != y.len() {
        return Err(Error::Argument("design rows and observations differ in length".into()));
    }
    if let Some(w) = weights {
        if w.len() != y.len() || w.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::Argument("weights must be positive, one per observation".into()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lm_fits_exponential_decay() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * (-1.3 * x).exp() + 0.2).collect();
        let fit = levenberg_marquardt(
            |p| {
                xs.iter()
                    .zip(&ys)
                    .map(|(x, y)| p[0] * (-p[1] * x).exp() + p[2] - y)
                    .collect()
            },
            &[1.0, 0.5, 0.0],
            &LmOptions::default(),
        )
        .unwrap();
        assert!((fit.params[0] - 2.5).abs() < 1e-9);
        assert!((fit.params[1] - 1.3).abs() < 1e-9);
        assert!((fit.params[2] - 0.2).abs() < 1e-9);
    }

    #[test]
    fn lm_respects_lower_bound() {
        // Unconstrained optimum at p = -1.
        let fit = levenberg_marquardt(
            |p| vec![p[0] + 1.0, 0.5 * (p[0] + 1.0)],
            &[2.0],
            &LmOptions {
                lower: Some(vec![0.0]),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(fit.params[0], 0.0);
    }

    #[test]
    fn lm_reports_iteration_cap() {
        let err = levenberg_marquardt(
            |p| vec![(p[0] - 3.0) * 1e3, p[1] - 1.0, (p[0] * p[1]).sin()],
            &[0.0, 0.0],
            &LmOptions {
                max_iterations: 1,
                ftol: 0.0,
                xtol: 0.0,
                lower: None,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Convergence { ref best, .. } if best.len() == 2));
    }

    #[test]
    fn linear_fit_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|x| 3.0 * x - 2.0).collect();
        let d = DMatrix::from_fn(10, 2, |i, j| if j == 0 { x[i] } else { 1.0 });
        let f = linear_lsq(&d, &y, None).unwrap();
        assert!((f.coef[0] - 3.0).abs() < 1e-12);
        assert!((f.coef[1] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn nnls_pins_negative_coefficient() {
        // Best unconstrained fit has a negative intercept.
        let x: Vec<f64> = (1..8).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|x| 2.0 * x - 1.0).collect();
        let d = DMatrix::from_fn(7, 2, |i, j| if j == 0 { x[i] } else { 1.0 });
        let f = nonneg_lsq(&d, &y, None).unwrap();
        assert_eq!(f.coef[1], 0.0);
        assert!(f.coef[0] > 0.0);
        assert!(!f.free[1]);
    }
}
