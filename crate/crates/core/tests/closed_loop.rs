//! Simulator → fitter round trips: exact recovery without noise and
//! calibrated uncertainties over seeded noisy trials.

use std::f64::consts::PI;

use jpa_core::chain::{callen_welton_temperature, fit_hemt_calibration};
use jpa_core::circuit::{fit_coupling, fit_dissipation};
use jpa_core::kerr::{kerr_from_sweep, PowerSweepPoint};
use jpa_core::resonance::{fit_one_port, ResonatorFit};
use jpa_core::simulator::{steady_state, synth_gate_sweep, synth_reflection, Branch};
use jpa_core::{CircuitModel, GateMap, KerrCavity, PumpDrive};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const TRIALS: u64 = 100;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Checks `(estimate, sigma)` pairs against `truth`: at least 97% within
/// 3σ, and the mean within 3 standard errors.
fn calibrated(name: &str, truth: f64, trials: &[(f64, f64)]) {
    let n = trials.len() as f64;
    let inside = trials.iter().filter(|(e, s)| (e - truth).abs() <= 3.0 * s).count();
    assert!(
        inside as f64 >= 0.97 * n,
        "{name}: only {inside}/{} trials within 3σ",
        trials.len()
    );
    let mean = trials.iter().map(|t| t.0).sum::<f64>() / n;
    let sd = (trials.iter().map(|t| (t.0 - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(
        (mean - truth).abs() <= 3.0 * sd / n.sqrt() + 1e-12 * truth.abs(),
        "{name}: mean {mean:e} biased from {truth:e} (sd {sd:e})"
    );
}

fn cavity() -> KerrCavity {
    KerrCavity::new(5.9e9, 2.0 * PI * 0.3e6, 2.0 * PI * 1.2e6, 0.0).unwrap()
}

fn probe_grid(c: &KerrCavity) -> Vec<f64> {
    let k = c.kappa_total() / (2.0 * PI);
    (0..401).map(|i| c.f_r + k * (-5.0 + 10.0 * i as f64 / 400.0)).collect()
}

fn reflection_fit(noise: f64, seed: u64) -> ResonatorFit {
    let c = cavity();
    let trace = synth_reflection(&c, 1e-18, &probe_grid(&c), noise, seed, Branch::Low)
        .unwrap()
        .with_background(Complex64::from_polar(0.8, 0.4), 35e-9);
    fit_one_port(&trace).unwrap()
}

#[test]
fn one_port_noiseless() {
    let c = cavity();
    let fit = reflection_fit(0.0, 0);
    assert!((fit.f_r - c.f_r).abs() < 1e-3 * c.kappa_total() / (2.0 * PI));
    assert!(rel(fit.kappa_i, c.kappa_i) < 1e-3);
    assert!(rel(fit.kappa_ex, c.kappa_ex) < 1e-3);
    assert!(rel(fit.background.delay, 35e-9) < 1e-3);
}

#[test]
fn one_port_noisy_trials() {
    let c = cavity();
    let fits: Vec<ResonatorFit> = (0..TRIALS).map(|s| reflection_fit(0.01, s)).collect();
    calibrated(
        "f_r",
        c.f_r,
        &fits.iter().map(|f| (f.f_r, f.sigma.f_r)).collect::<Vec<_>>(),
    );
    calibrated(
        "kappa_i",
        c.kappa_i,
        &fits.iter().map(|f| (f.kappa_i, f.sigma.kappa_i)).collect::<Vec<_>>(),
    );
    calibrated(
        "kappa_ex",
        c.kappa_ex,
        &fits.iter().map(|f| (f.kappa_ex, f.sigma.kappa_ex)).collect::<Vec<_>>(),
    );
}

fn circuit() -> CircuitModel {
    CircuitModel::with_kinetic_scaling(7.2e9, 6.2e9)
        .unwrap()
        .with_loss(1e-3, 15e3)
        .unwrap()
        .with_coupling(5e-15)
        .unwrap()
}

fn gate_rows() -> Vec<jpa_core::simulator::GateSweepRow> {
    let m = circuit();
    let voltages: Vec<f64> = (0..41).map(|i| -4.0 + 0.1 * i as f64).collect();
    synth_gate_sweep(&GateMap::default_for(&m).unwrap(), &m, &voltages).unwrap()
}

fn perturbed(values: &[(f64, f64)], rel_sigma: f64, seed: u64) -> (Vec<(f64, f64)>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).unwrap();
    let sigmas: Vec<f64> = values.iter().map(|p| rel_sigma * p.1).collect();
    let noisy = values
        .iter()
        .zip(&sigmas)
        .map(|(p, s)| (p.0, p.1 + s * unit.sample(&mut rng)))
        .collect();
    (noisy, sigmas)
}

#[test]
fn dissipation_noiseless() {
    let m = circuit();
    let pts: Vec<(f64, f64)> = gate_rows().iter().map(|r| (r.f_r, r.kappa_i)).collect();
    let fit = fit_dissipation(&pts, &m, None).unwrap();
    assert!(rel(fit.alpha_l, 1e-3) < 1e-3);
    assert!(rel(fit.r_j, 15e3) < 1e-3);
}

#[test]
fn dissipation_noisy_trials() {
    let m = circuit();
    let pts: Vec<(f64, f64)> = gate_rows().iter().map(|r| (r.f_r, r.kappa_i)).collect();
    let fits: Vec<_> = (0..TRIALS)
        .map(|s| {
            let (noisy, sigmas) = perturbed(&pts, 0.01, s);
            fit_dissipation(&noisy, &m, Some(&sigmas)).unwrap()
        })
        .collect();
    calibrated(
        "alpha_l",
        1e-3,
        &fits.iter().map(|f| (f.alpha_l, f.sigma_alpha_l)).collect::<Vec<_>>(),
    );
    calibrated(
        "r_j",
        15e3,
        &fits.iter().map(|f| (f.r_j, f.sigma_r_j)).collect::<Vec<_>>(),
    );
}

#[test]
fn coupling_noiseless() {
    let m = circuit();
    let pts: Vec<(f64, f64)> = gate_rows().iter().map(|r| (r.f_r, r.kappa_ex)).collect();
    let fit = fit_coupling(&pts, &m, None).unwrap();
    assert!(rel(fit.c_k, 5e-15) < 1e-3);
}

#[test]
fn coupling_noisy_trials() {
    let m = circuit();
    let pts: Vec<(f64, f64)> = gate_rows().iter().map(|r| (r.f_r, r.kappa_ex)).collect();
    let fits: Vec<_> = (0..TRIALS)
        .map(|s| {
            let (noisy, sigmas) = perturbed(&pts, 0.01, s);
            fit_coupling(&noisy, &m, Some(&sigmas)).unwrap()
        })
        .collect();
    calibrated(
        "c_k",
        5e-15,
        &fits.iter().map(|f| (f.c_k, f.sigma_c_k)).collect::<Vec<_>>(),
    );
}

const KERR: f64 = -2.0 * PI * 200.0;

/// Resonance under a probe that sits on the shifted resonance, found by
/// iterating the simulator's steady state.
fn tracked_resonance(c: &KerrCavity, power: f64) -> f64 {
    let mut f = c.f_r;
    for _ in 0..100 {
        let n = steady_state(c, &PumpDrive::new(f, power).unwrap(), Branch::Low).photons;
        let next = c.f_r + 0.5 * c.kerr * n / (2.0 * PI);
        if next == f {
            break;
        }
        f = next;
    }
    f
}

fn power_sweep(noise_hz: f64, seed: u64) -> Vec<PowerSweepPoint> {
    let c = KerrCavity::new(5.9e9, 2.0 * PI * 0.3e6, 2.0 * PI * 1.2e6, KERR).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).unwrap();
    (0..12)
        .map(|i| {
            let p = 1e-15 * i as f64;
            let f = tracked_resonance(&c, p);
            let measured = f + noise_hz * unit.sample(&mut rng);
            PowerSweepPoint {
                input_power: p,
                signal_frequency: measured,
                resonant_frequency: measured,
            }
        })
        .collect()
}

fn sweep_cavity() -> ResonatorFit {
    ResonatorFit::from_parameters(5.9e9, 2.0 * PI * 0.3e6, 2.0 * PI * 1.2e6)
}

#[test]
fn kerr_noiseless() {
    let est = kerr_from_sweep(&power_sweep(0.0, 0), &sweep_cavity()).unwrap();
    assert!(rel(est.kerr, KERR) < 1e-3, "{} vs {KERR}", est.kerr);
    assert!(est.warnings.is_empty(), "{:?}", est.warnings);
}

#[test]
fn kerr_noisy_trials() {
    let fits: Vec<_> = (0..TRIALS)
        .map(|s| kerr_from_sweep(&power_sweep(500.0, s), &sweep_cavity()).unwrap())
        .collect();
    calibrated(
        "kerr",
        KERR,
        &fits.iter().map(|f| (f.kerr, f.sigma_kerr)).collect::<Vec<_>>(),
    );
}

const T_ADD: f64 = 1.61;
const F_CAL: f64 = 5.784e9;

fn hemt_sweep(noise: f64, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).unwrap();
    (0..12)
        .map(|i| {
            let t = 0.01 + 0.09 * i as f64;
            let psd = 3.2 * (callen_welton_temperature(t, F_CAL).unwrap() + T_ADD);
            (t, psd + noise * unit.sample(&mut rng))
        })
        .collect()
}

#[test]
fn hemt_noiseless() {
    let cal = fit_hemt_calibration(&hemt_sweep(0.0, 0), F_CAL).unwrap();
    assert!(rel(cal.t_hemt_mc, T_ADD) < 1e-3);
    assert!(rel(cal.gain_scale, 3.2) < 1e-3);
}

#[test]
fn hemt_noisy_trials() {
    let fits: Vec<_> = (0..TRIALS)
        .map(|s| fit_hemt_calibration(&hemt_sweep(0.02, s), F_CAL).unwrap())
        .collect();
    calibrated(
        "t_hemt_mc",
        T_ADD,
        &fits
            .iter()
            .map(|f| (f.t_hemt_mc, f.sigma_t_hemt_mc))
            .collect::<Vec<_>>(),
    );
}
