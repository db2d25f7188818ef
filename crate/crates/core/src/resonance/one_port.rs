use std::f64::consts::PI;

use num_complex::Complex64;

use super::{edge_delay, reflection, unwrap_phase, ComplexReflectionTrace};
use crate::error::{Error, Result};
use crate::lsq::{levenberg_marquardt, LmFit, LmOptions};

/// Complex background multiplying the cavity response:
/// `amplitude · exp(i 2π delay (f − reference_frequency))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Background {
    pub amplitude: Complex64,
    /// Cable delay, s.
    pub delay: f64,
    /// Frequency at which `amplitude` is quoted, Hz.
    pub reference_frequency: f64,
}

impl Background {
    pub fn at(&self, f: f64) -> Complex64 {
        self.amplitude * Complex64::from_polar(1.0, 2.0 * PI * self.delay * (f - self.reference_frequency))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorUncertainty {
    pub f_r: f64,
    pub kappa_i: f64,
    pub kappa_ex: f64,
}

/// Fitted one-port resonator parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonatorFit {
    /// Resonant frequency, Hz.
    pub f_r: f64,
    /// Internal loss rate, s⁻¹.
    pub kappa_i: f64,
    /// External coupling rate, s⁻¹.
    pub kappa_ex: f64,
    pub background: Background,
    /// One-sigma uncertainties from the Jacobian at the optimum.
    pub sigma: ResonatorUncertainty,
    /// RMS residual per quadrature relative to the background amplitude.
    pub residual_norm: f64,
    pub iterations: usize,
}

impl ResonatorFit {
    /// A fit record built from known cavity parameters (no background, no
    /// uncertainties). Useful when parameters come from elsewhere.
    pub fn from_parameters(f_r: f64, kappa_i: f64, kappa_ex: f64) -> Self {
        Self {
            f_r,
            kappa_i,
            kappa_ex,
            background: Background {
                amplitude: Complex64::new(1.0, 0.0),
                delay: 0.0,
                reference_frequency: f_r,
            },
            sigma: ResonatorUncertainty {
                f_r: 0.0,
                kappa_i: 0.0,
                kappa_ex: 0.0,
            },
            residual_norm: 0.0,
            iterations: 0,
        }
    }

    pub fn kappa_total(&self) -> f64 {
        self.kappa_i + self.kappa_ex
    }

    /// Coupling efficiency `κ_ex/κ_tot`.
    pub fn efficiency(&self) -> f64 {
        self.kappa_ex / self.kappa_total()
    }

    /// Modelled trace value at frequency `f`, background included.
    pub fn model(&self, f: f64) -> Complex64 {
        self.background.at(f) * reflection(2.0 * PI * (f - self.f_r), self.kappa_i, self.kappa_ex)
    }
}

/// Fit scale: parameters are `[(f_r − f_ref)/w, κ_i/2πw, κ_ex/2πw, Re A, Im A, τ w]`.
struct Scaling {
    f_ref: f64,
    width: f64,
}

impl Scaling {
    fn model(&self, p: &[f64], f: f64) -> Complex64 {
        let x = (f - self.f_ref) / self.width;
        let delta = x - p[0];
        let gamma = reflection(delta, p[1], p[2]);
        let bg = Complex64::new(p[3], p[4]) * Complex64::from_polar(1.0, 2.0 * PI * p[5] * x);
        bg * gamma
    }
}

struct Guess {
    params: [f64; 6],
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Initial guesses for both coupling branches, the branch suggested by the
/// phase winding first.
fn initial_guesses(trace: &ComplexReflectionTrace, scale: &Scaling) -> Result<Vec<Guess>> {
    let f = trace.frequencies();
    let s = trace.s11();
    let n = f.len();

    let tau = edge_delay(f, s);
    let z: Vec<Complex64> = f
        .iter()
        .zip(s)
        .map(|(&fi, &si)| si * Complex64::from_polar(1.0, -2.0 * PI * tau * (fi - scale.f_ref)))
        .collect();
    let edge = (n / 10).max(2).min(n / 2);
    let edges = (0..edge).chain(n - edge..n);
    let a0: Complex64 = edges.clone().map(|i| z[i]).sum::<Complex64>() / (2 * edge) as f64;
    let a_mag = edges.map(|i| z[i].norm()).sum::<f64>() / (2 * edge) as f64;
    if a_mag <= 0.0 {
        return Err(Error::FitRejected("trace has zero background amplitude".into()));
    }

    let mags: Vec<f64> = s.iter().map(|v| v.norm()).collect();
    let diffs: Vec<f64> = mags.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let noise = 1.4826 * median(diffs) / std::f64::consts::SQRT_2;
    let (imin, &mmin) = mags
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let depth = a_mag - mmin;
    if depth <= 5.0 * noise || depth <= 1e-9 * a_mag {
        return Err(Error::FitRejected(format!(
            "no dip detected: depth {depth:.3e} vs noise {noise:.3e}"
        )));
    }
    if imin == 0 || imin == n - 1 {
        return Err(Error::FitRejected(
            "reflection minimum sits at the edge of the span".into(),
        ));
    }

    // 1 − |Γ|² is a Lorentzian of full width κ_tot.
    let absorb: Vec<f64> = mags.iter().map(|m| 1.0 - (m / a_mag).powi(2)).collect();
    let half = 0.5 * absorb[imin];
    let crossing = |range: Box<dyn Iterator<Item = usize>>| -> Option<f64> {
        let mut prev = imin;
        for i in range {
            if absorb[i] < half {
                let t = (absorb[prev] - half) / (absorb[prev] - absorb[i]);
                return Some(f[prev] + t * (f[i] - f[prev]));
            }
            prev = i;
        }
        None
    };
    let left = crossing(Box::new((0..imin).rev()));
    let right = crossing(Box::new(imin + 1..n));
    let fwhm = match (left, right) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (f[imin] - l),
        (None, Some(r)) => 2.0 * (r - f[imin]),
        (None, None) => 0.25 * (f[n - 1] - f[0]),
    };
    let kappa_tot = 2.0 * PI * fwhm.max((f[n - 1] - f[0]) / n as f64);
    let gamma0 = (mmin / a_mag).min(1.0);

    let phase: Vec<f64> = z.iter().map(|v| (v / a0).arg()).collect();
    let unwrapped = unwrap_phase(&phase);
    let winding = unwrapped[n - 1] - unwrapped[0];
    let over = winding.abs() > PI;

    let x_r = (f[imin] - scale.f_ref) / scale.width;
    let make = |eff: f64| Guess {
        params: [
            x_r,
            (1.0 - eff) * kappa_tot / (2.0 * PI * scale.width),
            eff * kappa_tot / (2.0 * PI * scale.width),
            a0.re,
            a0.im,
            tau * scale.width,
        ],
    };
    let over_eff = 0.5 * (1.0 + gamma0);
    let under_eff = 0.5 * (1.0 - gamma0);
    Ok(if over {
        vec![make(over_eff), make(under_eff)]
    } else {
        vec![make(under_eff), make(over_eff)]
    })
}

/// Non-linear least-squares fit of a one-port reflection trace to the
/// cavity model times a complex background with cable delay.
pub fn fit_one_port(trace: &ComplexReflectionTrace) -> Result<ResonatorFit> {
    let f = trace.frequencies();
    let s = trace.s11();
    let (f_lo, f_hi) = trace.span();
    let scale = Scaling {
        f_ref: 0.5 * (f_lo + f_hi),
        width: f_hi - f_lo,
    };
    let guesses = initial_guesses(trace, &scale)?;

    let residuals = |p: &[f64]| -> Vec<f64> {
        let mut r = Vec::with_capacity(2 * f.len());
        for (&fi, &si) in f.iter().zip(s) {
            let d = scale.model(p, fi) - si;
            r.push(d.re);
            r.push(d.im);
        }
        r
    };
    let opts = LmOptions {
        lower: Some(vec![
            f64::NEG_INFINITY,
            0.0,
            0.0,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        ]),
        ..LmOptions::default()
    };

    let mut best: Option<LmFit> = None;
    let mut last_err = None;
    for g in &guesses {
        match levenberg_marquardt(residuals, &g.params, &opts) {
            Ok(fit) => {
                if best.as_ref().is_none_or(|b| fit.cost < b.cost) {
                    best = Some(fit);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let fit = match (best, last_err) {
        (Some(fit), _) => fit,
        (
            None,
            Some(Error::Convergence {
                message,
                iterations,
                best,
            }),
        ) => {
            return Err(Error::Convergence {
                message: format!(
                    "{message}; best [f_r Hz, κ_i s⁻¹, κ_ex s⁻¹] = [{:.9e}, {:.6e}, {:.6e}]",
                    scale.f_ref + best[0] * scale.width,
                    2.0 * PI * scale.width * best[1],
                    2.0 * PI * scale.width * best[2]
                ),
                iterations,
                best: to_physical(&scale, &best),
            })
        }
        (None, Some(e)) => return Err(e),
        (None, None) => unreachable!("at least one initial guess"),
    };

    let p = &fit.params;
    let f_r = scale.f_ref + p[0] * scale.width;
    if !(f_r >= f_lo && f_r <= f_hi) {
        return Err(Error::FitRejected(format!(
            "fitted resonance {f_r:.6e} Hz outside the trace span"
        )));
    }
    let amp = Complex64::new(p[3], p[4]);
    let rate = 2.0 * PI * scale.width;
    Ok(ResonatorFit {
        f_r,
        kappa_i: rate * p[1],
        kappa_ex: rate * p[2],
        background: Background {
            amplitude: amp,
            delay: p[5] / scale.width,
            reference_frequency: scale.f_ref,
        },
        sigma: ResonatorUncertainty {
            f_r: scale.width * fit.sigma(0),
            kappa_i: rate * fit.sigma(1),
            kappa_ex: rate * fit.sigma(2),
        },
        residual_norm: (fit.cost / fit.residuals.len() as f64).sqrt() / amp.norm(),
        iterations: fit.iterations,
    })
}

/// `[f_r, κ_i, κ_ex, Re A, Im A, delay]` in physical units.
fn to_physical(scale: &Scaling, p: &[f64]) -> Vec<f64> {
    let rate = 2.0 * PI * scale.width;
    vec![
        scale.f_ref + p[0] * scale.width,
        rate * p[1],
        rate * p[2],
        p[3],
        p[4],
        p[5] / scale.width,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    const F_R: f64 = 5.9e9;
    const KI: f64 = 2.0 * PI * 0.5e6;
    const KEX: f64 = 2.0 * PI * 2.5e6;

    fn model_trace(n: usize, span: f64) -> ComplexReflectionTrace {
        let freqs: Vec<f64> = (0..n)
            .map(|i| F_R - span / 2.0 + span * i as f64 / (n - 1) as f64)
            .collect();
        let s = freqs
            .iter()
            .map(|&f| reflection(2.0 * PI * (f - F_R), KI, KEX))
            .collect();
        ComplexReflectionTrace::new(freqs, s).unwrap()
    }

    #[test]
    fn noiseless_round_trip() {
        let fit = fit_one_port(&model_trace(401, 30e6)).unwrap();
        assert!(((fit.f_r - F_R) / F_R).abs() < 1e-6);
        assert!(((fit.kappa_i - KI) / KI).abs() < 1e-6, "{}", fit.kappa_i / KI);
        assert!(((fit.kappa_ex - KEX) / KEX).abs() < 1e-6);
        assert!(fit.residual_norm < 1e-8);
        assert!((fit.efficiency() - 5.0 / 6.0).abs() < 1e-6);
    }

    #[test]
    fn undercoupled_round_trip() {
        let freqs: Vec<f64> = (0..301).map(|i| 6e9 - 10e6 + 20e6 * i as f64 / 300.0).collect();
        let (ki, kex) = (2.0 * PI * 2.0e6, 2.0 * PI * 0.7e6);
        let s = freqs
            .iter()
            .map(|&f| reflection(2.0 * PI * (f - 6e9), ki, kex))
            .collect();
        let trace = ComplexReflectionTrace::new(freqs, s)
            .unwrap()
            .with_background(Complex64::from_polar(0.3, 1.1), 42e-9);
        let fit = fit_one_port(&trace).unwrap();
        assert!(((fit.kappa_i - ki) / ki).abs() < 1e-6);
        assert!(((fit.kappa_ex - kex) / kex).abs() < 1e-6);
    }

    #[test]
    fn background_is_absorbed() {
        let base = fit_one_port(&model_trace(401, 30e6)).unwrap();
        let shifted = model_trace(401, 30e6).with_background(Complex64::from_polar(0.02, -2.4), 63.5e-9);
        let fit = fit_one_port(&shifted).unwrap();
        for (a, b) in [
            (fit.f_r, base.f_r),
            (fit.kappa_i, base.kappa_i),
            (fit.kappa_ex, base.kappa_ex),
        ] {
            assert!(((a - b) / b).abs() < 1e-9, "{a} vs {b}");
        }
        assert!((fit.background.delay - 63.5e-9).abs() < 1e-15);
    }

    #[test]
    fn flat_trace_rejected() {
        let freqs: Vec<f64> = (0..50).map(|i| 5.9e9 + i as f64 * 1e5).collect();
        let trace = ComplexReflectionTrace::new(freqs, vec![Complex64::new(1.0, 0.0); 50]).unwrap();
        assert!(matches!(fit_one_port(&trace), Err(Error::FitRejected(_))));
    }

    #[test]
    fn noise_only_trace_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let normal = Normal::new(0.0, 0.01).unwrap();
        let freqs: Vec<f64> = (0..200).map(|i| 5.9e9 + i as f64 * 1e5).collect();
        let s = (0..200)
            .map(|_| Complex64::new(1.0 + normal.sample(&mut rng), normal.sample(&mut rng)))
            .collect();
        let trace = ComplexReflectionTrace::new(freqs, s).unwrap();
        assert!(fit_one_port(&trace).is_err());
    }

    #[test]
    fn noisy_fit_reports_sensible_sigma() {
        let clean = model_trace(401, 30e6);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let normal = Normal::new(0.0, 0.01).unwrap();
        let s = clean
            .s11()
            .iter()
            .map(|z| z + Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)))
            .collect();
        let trace = ComplexReflectionTrace::new(clean.frequencies().to_vec(), s).unwrap();
        let fit = fit_one_port(&trace).unwrap();
        assert!(fit.sigma.kappa_i > 0.0);
        assert!((fit.kappa_i - KI).abs() < 5.0 * fit.sigma.kappa_i);
        assert!((fit.residual_norm - 0.01).abs() < 0.002);
    }
}
