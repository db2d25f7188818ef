//! Scalar root finding: bracketed bisection with Newton polish, and real
//! roots of cubics.

use crate::error::{Error, Result};

/// Root of `f` on `[lo, hi]` where `f(lo)` and `f(hi)` differ in sign.
///
/// Bisection narrows the bracket to `tol`, then up to a few Newton steps
/// (with derivative `df`) polish the estimate; a Newton step that leaves the
/// final bracket is discarded.
pub fn bisect_newton<F, D>(f: F, df: D, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Domain(format!(
            "root not bracketed on [{lo}, {hi}]: f = {flo:e}, {fhi:e}"
        )));
    }
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..4 {
        let d = df(x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let next = x - f(x) / d;
        if !(next >= lo && next <= hi) {
            break;
        }
        if next == x {
            break;
        }
        x = next;
    }
    Ok(x)
}

/// Real roots of `a x³ + b x² + c x + d` (with `a ≠ 0`), ascending, together
/// with the cubic discriminant.
///
/// Near-degenerate discriminants are resolved by the relative tolerance
/// `1e-10`: within it the cubic is reported as having a repeated root.
#[derive(Debug, Clone)]
pub struct CubicRoots {
    pub roots: Vec<f64>,
    pub discriminant: f64,
}

pub fn cubic_real_roots(a: f64, b: f64, c: f64, d: f64) -> CubicRoots {
    assert!(a != 0.0, "leading coefficient must be nonzero");
    let (b, c, d) = (b / a, c / a, d / a);
    // Depressed cubic t³ + p t + q with x = t − b/3.
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = -(4.0 * p * p * p + 27.0 * q * q);
    let scale = (4.0 * p.abs().powi(3)).max(27.0 * q * q).max(f64::MIN_POSITIVE);
    let shift = -b / 3.0;

    let mut roots = if disc > 1e-10 * scale {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift)
            .collect::<Vec<_>>()
    } else if disc < -1e-10 * scale {
        let s = (q * q / 4.0 + p * p * p / 27.0).sqrt();
        let t = (-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt();
        vec![t + shift]
    } else if p.abs() <= f64::EPSILON * (b * b + c.abs()).max(1.0) {
        vec![shift]
    } else {
        // Double root at −3q/(2p), simple root at 3q/p.
        vec![3.0 * q / p + shift, -1.5 * q / p + shift]
    };

    let poly = |x: f64| ((x + b) * x + c) * x + d;
    let dpoly = |x: f64| (3.0 * x + 2.0 * b) * x + c;
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let dv = dpoly(*r);
            if dv == 0.0 {
                break;
            }
            let next = *r - poly(*r) / dv;
            if !next.is_finite() || poly(next).abs() >= poly(*r).abs() {
                break;
            }
            *r = next;
        }
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    CubicRoots {
        roots,
        discriminant: disc * a.powi(4),
    }
}
