use std::f64::consts::PI;
use std::path::Path;

use jpa_core::chain::NoiseChain;
use jpa_core::circuit::CircuitModel;
use jpa_core::constants::{dbm_to_watts, linear_to_db, watts_to_dbm};
use jpa_core::io::{
    emit_plot, write_gate_sweep_csv, write_reflection_csv, write_spectrum_csv, write_touchstone_s1p, AxisSpec, Grid,
    GridAxis, PlotSpec, ResultRecord,
};
use jpa_core::simulator::{
    critical_point, gain_map as compute_map, gain_pair, steady_state, synth_gate_sweep, synth_reflection,
    synth_spectrum, Branch, GateMap, KerrCavity, PilotTone, PumpDrive, SpectrumConfig,
};

use super::{angular, echo, emit, linspace};
use crate::args::{CavityArgs, GainMapArgs, SimGateSweepArgs, SimReflectionArgs, SimSpectrumArgs};
use crate::config::{require, Config};
use crate::CliResult;

fn cavity(a: &CavityArgs) -> CliResult<KerrCavity> {
    Ok(KerrCavity::new(
        a.f_r,
        angular(a.kappa_i),
        angular(a.kappa_ex),
        angular(a.kerr),
    )?)
}

pub fn gain_map(a: &GainMapArgs) -> CliResult<ResultRecord> {
    let c = cavity(&a.cavity)?;
    let mut rec = ResultRecord::new("gain-map");
    echo(&mut rec, a);
    let cp = critical_point(&c)?;
    let width = c.kappa_total() / (2.0 * PI);
    let p_c_dbm = watts_to_dbm(cp.power);
    let p_lo = a.power_min_dbm.unwrap_or(p_c_dbm - 15.0);
    let p_hi = a.power_max_dbm.unwrap_or(p_c_dbm + 1.0);
    let f_lo = a.pump_min.unwrap_or(c.f_r - 1.5 * width);
    let f_hi = a.pump_max.unwrap_or(c.f_r + 0.5 * width);
    if a.powers == 0 || a.freqs == 0 {
        return Err(super::usage("--powers and --freqs must be positive"));
    }
    let powers_dbm = linspace(p_lo, p_hi, a.powers);
    let powers: Vec<f64> = powers_dbm.iter().map(|&p| dbm_to_watts(p)).collect();
    let freqs = linspace(f_lo, f_hi, a.freqs);
    let map = compute_map(&c, &powers, &freqs, a.signal_offset, a.branch.into())?;

    rec.output("critical_power", cp.power, "W")
        .output("critical_power_dbm", p_c_dbm, "dBm")
        .output("critical_pump_frequency", cp.pump_frequency, "Hz")
        .output("critical_photons", cp.photons, "1")
        .output(
            "unstable_cells",
            map.gain_db.iter().filter(|g| g.is_none()).count() as f64,
            "1",
        );
    if let Some(g) = map.max_gain_db() {
        rec.output("max_gain", g, "dB");
    }
    let grid = Grid::new(
        GridAxis {
            label: "pump frequency".into(),
            unit: "Hz".into(),
            values: freqs,
        },
        GridAxis {
            label: "pump power".into(),
            unit: "dBm".into(),
            values: powers_dbm,
        },
        "dB",
        map.gain_db,
    )?;
    rec.grid("gain", grid);
    if let Some(path) = &a.plot {
        let spec = PlotSpec::map(
            "Signal gain",
            AxisSpec::new("Pump frequency", "Hz"),
            AxisSpec::new("Pump power", "dBm"),
            "gain",
        );
        let svg = emit_plot(&spec, &rec)?;
        emit(&mut rec, path, svg.as_bytes())?;
    }
    Ok(rec)
}

fn is_s1p(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("s1p"))
}

pub fn reflection(a: &SimReflectionArgs) -> CliResult<ResultRecord> {
    let c = cavity(&a.cavity)?;
    let mut rec = ResultRecord::new("simulate reflection");
    echo(&mut rec, a);
    rec.seed(a.seed);
    if a.points < 5 {
        return Err(super::usage("--points must be at least 5"));
    }
    let span = a.span.unwrap_or(10.0 * c.kappa_total() / (2.0 * PI));
    let grid = linspace(c.f_r - 0.5 * span, c.f_r + 0.5 * span, a.points);
    let p = dbm_to_watts(a.probe_dbm);
    let trace = synth_reflection(&c, p, &grid, a.noise, a.seed, a.branch.into())?;
    let text = if is_s1p(&a.trace) {
        write_touchstone_s1p(&trace)
    } else {
        write_reflection_csv(&trace)
    };
    emit(&mut rec, &a.trace, text.as_bytes())?;
    let on_res = steady_state(&c, &PumpDrive::new(c.f_r, p)?, a.branch.into());
    rec.output("points", a.points as f64, "1")
        .output("photons_at_resonance", on_res.photons, "1")
        .output("probe_power", p, "W");
    Ok(rec)
}

pub fn spectrum(a: &SimSpectrumArgs, config: &Config) -> CliResult<ResultRecord> {
    let c = cavity(&a.cavity)?;
    let mut rec = ResultRecord::new("simulate spectrum");
    echo(&mut rec, a);
    rec.seed(a.seed);
    let eta_s = require(a.eta_s, config.eta_s, "eta-s", "eta_s")?;
    let eta_c_off = require(a.eta_c_off, config.eta_c_off, "eta-c-off", "eta_c_off")?;
    let t_hemt = require(a.t_hemt, config.t_hemt, "t-hemt", "t_hemt_K")?;
    let rbw = require(a.rbw, config.rbw, "rbw", "rbw_Hz")?;
    let drive = PumpDrive::new(a.pump, dbm_to_watts(a.pump_dbm))?;
    let pair = gain_pair(&c, &drive, angular(a.pilot - a.pump), Branch::Low)?;
    let gain = pair.signal_gain();
    let chain = NoiseChain::new(eta_s, eta_c_off, gain, t_hemt, a.pilot)?;
    let pilot = PilotTone {
        frequency: a.pilot,
        power: dbm_to_watts(a.pilot_dbm),
    };
    let cfg = SpectrumConfig {
        center: a.center.unwrap_or(a.pilot),
        bins: a.bins,
        rbw,
        averages: a.averages,
    };
    let pair_spectra = synth_spectrum(&c, &drive, &chain, pilot, &cfg, a.seed)?;
    emit(&mut rec, &a.on, write_spectrum_csv(&pair_spectra.on).as_bytes())?;
    emit(&mut rec, &a.off, write_spectrum_csv(&pair_spectra.off).as_bytes())?;
    rec.output("signal_gain", gain, "1")
        .output("signal_gain_db", linear_to_db(gain), "dB")
        .output("idler_gain", pair.g_i.norm_sqr(), "1")
        .output("eta_on", chain.eta_on(), "1")
        .output("eta_off", chain.eta_off(), "1")
        .output("pump_photons", steady_state(&c, &drive, Branch::Low).photons, "1");
    Ok(rec)
}

pub fn gate_sweep(a: &SimGateSweepArgs, config: &Config) -> CliResult<ResultRecord> {
    let mut rec = ResultRecord::new("simulate gate-sweep");
    echo(&mut rec, a);
    let f_geo = require(a.f_geo, config.f_geo, "f-geo", "f_geo_Hz")?;
    let f0 = require(a.f0, config.f0, "f0", "f0_Hz")?;
    let model = CircuitModel::with_kinetic_scaling(f_geo, f0)?
        .with_loss(a.alpha_l, a.r_j)?
        .with_coupling(a.c_k)?;
    if a.points < 2 {
        return Err(super::usage("--points must be at least 2"));
    }
    let map = GateMap::default_for(&model)?;
    let v = linspace(a.v_min, a.v_max, a.points);
    let rows = synth_gate_sweep(&map, &model, &v)?;
    emit(&mut rec, &a.table, write_gate_sweep_csv(&rows).as_bytes())?;
    let fmin = rows.iter().map(|r| r.f_r).fold(f64::INFINITY, f64::min);
    let fmax = rows.iter().map(|r| r.f_r).fold(f64::NEG_INFINITY, f64::max);
    rec.output("rows", rows.len() as f64, "1")
        .output("f_r_min", fmin, "Hz")
        .output("f_r_max", fmax, "Hz")
        .output("z0", model.z0, "ohm");
    Ok(rec)
}
