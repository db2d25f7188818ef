use std::f64::consts::PI;
use std::path::Path;

use jpa_core::chain::fit_hemt_calibration;
use jpa_core::circuit::{
    band_evaluate, dissipation_predictor, fit_coupling, fit_dissipation, fit_dissipation_band, kappa_i_model,
    kerr_predictor, CircuitModel, JunctionState,
};
use jpa_core::constants::dbm_to_watts;
use jpa_core::io::{
    emit_plot, parse_gate_sweep_csv, parse_hemt_csv, parse_power_sweep_csv, parse_reflection_csv, parse_touchstone_s1p,
    AxisSpec, PlotSpec, ResultRecord,
};
use jpa_core::kerr::{kerr_design, kerr_from_sweep, kerr_predict as predict, PowerSweepPoint};
use jpa_core::resonance::{extract_resonance_from_phase, fit_one_port, ComplexReflectionTrace, ResonatorFit};

use super::{angular, echo, emit, linspace, read_text, usage};
use crate::args::{CalibrateHemtArgs, FitCircuitArgs, FitResonanceArgs, KerrExtractArgs, KerrPredictArgs};
use crate::config::Config;
use crate::CliResult;

fn load_trace(path: &Path) -> CliResult<(ComplexReflectionTrace, Vec<u8>)> {
    let (text, bytes) = read_text(path)?;
    let is_s1p = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("s1p"));
    let trace = if is_s1p {
        parse_touchstone_s1p(&text)?
    } else {
        parse_reflection_csv(&text)?
    };
    Ok((trace, bytes))
}

pub fn fit_resonance(a: &FitResonanceArgs) -> CliResult<ResultRecord> {
    let (trace, bytes) = load_trace(&a.input)?;
    let mut rec = ResultRecord::new("fit-resonance");
    echo(&mut rec, a);
    rec.input_file("in", &bytes);

    let fit = fit_one_port(&trace)?;
    let k = fit.kappa_total();
    let sigma_eff =
        ((fit.kappa_ex * fit.sigma.kappa_i).powi(2) + (fit.kappa_i * fit.sigma.kappa_ex).powi(2)).sqrt() / (k * k);
    let w = angular(fit.f_r);
    rec.output_with_sigma("f_r", fit.f_r, fit.sigma.f_r, "Hz")
        .output_with_sigma("kappa_i", fit.kappa_i, fit.sigma.kappa_i, "1/s")
        .output_with_sigma("kappa_ex", fit.kappa_ex, fit.sigma.kappa_ex, "1/s")
        .output_with_sigma(
            "kappa_i_hz",
            fit.kappa_i / (2.0 * PI),
            fit.sigma.kappa_i / (2.0 * PI),
            "Hz",
        )
        .output_with_sigma(
            "kappa_ex_hz",
            fit.kappa_ex / (2.0 * PI),
            fit.sigma.kappa_ex / (2.0 * PI),
            "Hz",
        )
        .output_with_sigma("efficiency", fit.efficiency(), sigma_eff, "1")
        .output("q_i", w / fit.kappa_i, "1")
        .output("q_ex", w / fit.kappa_ex, "1")
        .output("cable_delay", fit.background.delay, "s")
        .output("residual_norm", fit.residual_norm, "1");
    match extract_resonance_from_phase(&trace) {
        Ok(p) => {
            rec.output("f_r_phase", p.f_r, "Hz");
            for w in p.warnings {
                rec.warn(w);
            }
        }
        Err(e) => {
            rec.warn(format!("phase-slope resonance unavailable: {e}"));
        }
    }

    let f = trace.frequencies().to_vec();
    let data: Vec<f64> = trace.s11().iter().map(|z| z.norm()).collect();
    let model: Vec<f64> = f.iter().map(|&x| fit.model(x).norm()).collect();
    rec.series("f", "Hz", f)
        .series("s11_mag", "1", data)
        .series("s11_mag_fit", "1", model);
    if let Some(path) = &a.plot {
        let spec = PlotSpec::trace(
            "Reflection magnitude",
            AxisSpec::new("Frequency", "Hz"),
            AxisSpec::new("|S11|", "1"),
            "f",
            &["s11_mag", "s11_mag_fit"],
        );
        let svg = emit_plot(&spec, &rec)?;
        emit(&mut rec, path, svg.as_bytes())?;
    }
    Ok(rec)
}

pub fn fit_circuit(a: &FitCircuitArgs, config: &Config) -> CliResult<ResultRecord> {
    let (text, bytes) = read_text(&a.input)?;
    let rows = parse_gate_sweep_csv(&text)?;
    let mut rec = ResultRecord::new("fit-circuit");
    echo(&mut rec, a);
    rec.input_file("in", &bytes);

    let f_geo = crate::config::require(a.f_geo, config.f_geo, "f-geo", "f_geo_Hz")?;
    let band = match (a.f0_min.or(config.f0_min), a.f0_max.or(config.f0_max)) {
        (Some(lo), Some(hi)) => Some((lo, hi)),
        (None, None) => None,
        _ => return Err(usage("--f0-min and --f0-max go together")),
    };
    let f0 = match (a.f0.or(config.f0), band) {
        (Some(f0), _) => f0,
        (None, Some((lo, hi))) => 0.5 * (lo + hi),
        (None, None) => return Err(usage("give --f0 or an f0 band (--f0-min/--f0-max)")),
    };
    let model = CircuitModel::with_kinetic_scaling(f_geo, f0)?;
    let ki: Vec<(f64, f64)> = rows.iter().map(|r| (r.f_r, r.kappa_i)).collect();
    let kex: Vec<(f64, f64)> = rows.iter().map(|r| (r.f_r, r.kappa_ex)).collect();
    let diss = fit_dissipation(&ki, &model, None)?;
    let coup = fit_coupling(&kex, &model, None)?;
    rec.output("f0", f0, "Hz")
        .output("z0", model.z0, "ohm")
        .output_with_sigma("alpha_l", diss.alpha_l, diss.sigma_alpha_l, "1")
        .output_with_sigma("r_j", diss.r_j, diss.sigma_r_j, "ohm")
        .output("kappa_i_residual_rms", diss.residual_rms, "1/s")
        .output_with_sigma("c_k", coup.c_k, coup.sigma_c_k, "F")
        .output("kappa_ex_residual_rms", coup.residual_rms, "1/s");

    if let Some((lo, hi)) = band {
        let b = fit_dissipation_band(&ki, f_geo, (lo, hi), a.grid)?;
        rec.output_with_sigma("r_j_band", b.r_j, b.r_j_statistical, "ohm")
            .output("r_j_systematic", b.r_j_systematic, "ohm")
            .output("alpha_l_band", b.alpha_l, "1")
            .output("alpha_l_systematic", b.alpha_l_systematic, "1");
        for f in &b.failures {
            rec.warn(format!("f0 = {:e} Hz excluded: {}", f.f0, f.error));
        }
        let fmin = rows.iter().map(|r| r.f_r).fold(f64::INFINITY, f64::min);
        let fmax = rows.iter().map(|r| r.f_r).fold(f64::NEG_INFINITY, f64::max).min(lo);
        let x = linspace(fmin, fmax, 60);
        let env = band_evaluate(&x, (lo, hi), a.grid, dissipation_predictor(&ki, f_geo, &x))?;
        let central_model = model.with_loss(diss.alpha_l, diss.r_j)?;
        let central = x
            .iter()
            .map(|&f| JunctionState::from_resonance(f, &central_model).map(|s| kappa_i_model(&s, &central_model)))
            .collect::<jpa_core::Result<Vec<_>>>()?;
        rec.series("f_r", "Hz", x)
            .series("kappa_i_min", "1/s", env.min)
            .series("kappa_i_max", "1/s", env.max)
            .series("kappa_i_central", "1/s", central);
        if let Some(path) = &a.plot {
            let spec = PlotSpec::envelope(
                "Internal loss across the f0 band",
                AxisSpec::new("Resonance", "Hz"),
                AxisSpec::new("kappa_i", "1/s"),
                "f_r",
                &["kappa_i_min", "kappa_i_max", "kappa_i_central"],
            );
            let svg = emit_plot(&spec, &rec)?;
            emit(&mut rec, path, svg.as_bytes())?;
        }
    } else if a.plot.is_some() {
        return Err(usage("--plot needs an f0 band (--f0-min/--f0-max)"));
    }
    Ok(rec)
}

pub fn kerr_extract(a: &KerrExtractArgs) -> CliResult<ResultRecord> {
    let (text, bytes) = read_text(&a.input)?;
    let rows = parse_power_sweep_csv(&text)?;
    let mut rec = ResultRecord::new("kerr-extract");
    echo(&mut rec, a);
    rec.input_file("in", &bytes);
    if rows.is_empty() {
        return Err(jpa_core::Error::Argument("empty power sweep".into()).into());
    }
    let points: Vec<PowerSweepPoint> = rows
        .iter()
        .map(|r| PowerSweepPoint {
            input_power: dbm_to_watts(r.input_power_dbm),
            signal_frequency: r.signal_frequency,
            resonant_frequency: r.resonant_frequency,
        })
        .collect();
    let cavity = ResonatorFit::from_parameters(rows[0].resonant_frequency, angular(a.kappa_i), angular(a.kappa_ex));
    let est = kerr_from_sweep(&points, &cavity)?;
    rec.output_with_sigma("kerr", est.kerr, est.sigma_kerr, "1/s")
        .output_with_sigma("kerr_hz", est.kerr_hz(), est.sigma_kerr / (2.0 * PI), "Hz")
        .output_with_sigma("shift_per_power", est.kerr_per_power, est.sigma_kerr_per_power, "Hz/W")
        .output("shift_per_power_mhz_per_fw", est.mhz_per_fw(), "MHz/fW")
        .output("zero_power_frequency", est.zero_power_frequency, "Hz")
        .output("points_used", est.points_used as f64, "1");
    for w in est.warnings {
        rec.warn(w);
    }
    rec.series("pin", "dBm", rows.iter().map(|r| r.input_power_dbm).collect())
        .series("f_r", "Hz", rows.iter().map(|r| r.resonant_frequency).collect());
    Ok(rec)
}

fn report_state(rec: &mut ResultRecord, s: &JunctionState) {
    let k = predict(s);
    rec.output("l_j", s.l_j, "H")
        .output("kl", s.kl, "rad")
        .output("f_r", s.f_r, "Hz")
        .output("delta_u_bar", s.delta_u_bar, "1")
        .output("c_eff", s.c_eff, "F")
        .output("kerr", k, "1/s")
        .output("kerr_hz", k / (2.0 * PI), "Hz");
}

pub fn kerr_predict(a: &KerrPredictArgs, config: &Config) -> CliResult<ResultRecord> {
    let mut rec = ResultRecord::new("kerr-predict");
    echo(&mut rec, a);
    let f0 = a.f0.or(config.f0);
    let f_geo = a.f_geo.or(config.f_geo);
    let band = match (a.f0_min.or(config.f0_min), a.f0_max.or(config.f0_max)) {
        (Some(lo), Some(hi)) => Some((lo, hi)),
        (None, None) => None,
        _ => return Err(usage("--f0-min and --f0-max go together")),
    };
    let model = |f0: f64| -> CliResult<CircuitModel> {
        let f_geo = f_geo.unwrap_or(f0);
        Ok(match a.z0 {
            Some(z0) => CircuitModel::new(f_geo, f0, z0)?,
            None => CircuitModel::with_kinetic_scaling(f_geo, f0)?,
        })
    };

    let mut did_something = false;
    if let Some(ic) = a.ic {
        let f0 = f0.ok_or_else(|| usage("--ic needs --f0"))?;
        let d = kerr_design(ic, &model(f0)?)?;
        report_state(&mut rec, &d.state);
        did_something = true;
    } else if let Some(f_r) = a.f_r {
        let f0 = f0.ok_or_else(|| usage("--f-r needs --f0"))?;
        report_state(&mut rec, &JunctionState::from_resonance(f_r, &model(f0)?)?);
        did_something = true;
    }
    if let Some((lo, hi)) = band {
        let f_geo = f_geo.ok_or_else(|| usage("band mode needs --f-geo"))?;
        let (fr_lo, fr_hi) = match (a.fr_min, a.fr_max) {
            (Some(l), Some(h)) => (l, h),
            _ => return Err(usage("band mode needs --fr-min and --fr-max")),
        };
        let x = linspace(fr_lo, fr_hi, a.points.max(2));
        let env = band_evaluate(&x, (lo, hi), a.grid, kerr_predictor(f_geo, &x))?;
        for f in &env.failures {
            rec.warn(format!("f0 = {:e} Hz excluded: {}", f.f0, f.error));
        }
        // More negative is larger in magnitude; report |K| bounds.
        let kmin: Vec<f64> = env.max.iter().map(|k| -k / (2.0 * PI)).collect();
        let kmax: Vec<f64> = env.min.iter().map(|k| -k / (2.0 * PI)).collect();
        rec.series("f_r", "Hz", x)
            .series("kerr_abs_min_hz", "Hz", kmin)
            .series("kerr_abs_max_hz", "Hz", kmax);
        if let Some(path) = &a.plot {
            let spec = PlotSpec::envelope(
                "Kerr constant across the f0 band",
                AxisSpec::new("Resonance", "Hz"),
                AxisSpec::new("|K|/2pi", "Hz"),
                "f_r",
                &["kerr_abs_min_hz", "kerr_abs_max_hz"],
            );
            let svg = emit_plot(&spec, &rec)?;
            emit(&mut rec, path, svg.as_bytes())?;
        }
        did_something = true;
    }
    if !did_something {
        return Err(usage("give --ic, --f-r, or an f0 band"));
    }
    Ok(rec)
}

pub fn calibrate_hemt(a: &CalibrateHemtArgs) -> CliResult<ResultRecord> {
    let (text, bytes) = read_text(&a.input)?;
    let sweep = parse_hemt_csv(&text)?;
    let mut rec = ResultRecord::new("calibrate-hemt");
    echo(&mut rec, a);
    rec.input_file("in", &bytes);
    let cal = fit_hemt_calibration(&sweep, a.frequency)?;
    rec.output_with_sigma("t_hemt_mc", cal.t_hemt_mc, cal.sigma_t_hemt_mc, "K")
        .output_with_sigma("gain_scale", cal.gain_scale, cal.sigma_gain_scale, "1")
        .series("t_set", "K", sweep.iter().map(|p| p.0).collect())
        .series("psd", "K", sweep.iter().map(|p| p.1).collect());
    Ok(rec)
}
