use jpa_core::chain::{
    delta_snr as compare_snr, estimate_attenuation as attenuation, gain_from_pilot, refer_to_input, NoiseChain,
};
use jpa_core::constants::{db_to_linear, linear_to_db};
use jpa_core::io::{parse_spectrum_csv, ResultRecord};
use jpa_core::paramp::{device_quantum_limit, expected_total_input_noise, vacuum_level, ExpectedNoiseInputs};

use super::{echo, read_text, usage};
use crate::args::{DeltaSnrArgs, EstimateAttenuationArgs, ReferNoiseArgs};
use crate::config::{require, Config};
use crate::CliResult;

pub fn estimate_attenuation(a: &EstimateAttenuationArgs, config: &Config) -> CliResult<ResultRecord> {
    let mut rec = ResultRecord::new("estimate-attenuation");
    echo(&mut rec, a);
    let rbw = require(a.rbw, config.rbw, "rbw", "rbw_Hz")?;
    let est = attenuation(a.signal_dbm, a.margin_db, a.t_noise, rbw, a.cavity_loss_db)?;
    rec.output("floor", est.floor_dbm, "dBm")
        .output("input_signal", est.input_signal_dbm, "dBm")
        .output("attenuation", est.attenuation_db, "dB");
    if let Some(expected) = config.attenuation_db {
        let diff = est.attenuation_db - expected;
        rec.output("attenuation_minus_config", diff, "dB");
    }
    Ok(rec)
}

pub fn refer_noise(a: &ReferNoiseArgs, config: &Config) -> CliResult<ResultRecord> {
    let mut rec = ResultRecord::new("refer-noise");
    echo(&mut rec, a);
    let eta_s = require(a.eta_s, config.eta_s, "eta-s", "eta_s")?;
    let eta_c_off = require(a.eta_c_off, config.eta_c_off, "eta-c-off", "eta_c_off")?;
    let t_hemt = require(a.t_hemt, config.t_hemt, "t-hemt", "t_hemt_K")?;
    let gain = db_to_linear(a.gain_db);
    let chain = NoiseChain::new(eta_s, eta_c_off, gain, t_hemt, a.frequency)?;
    let v = vacuum_level(a.frequency)?.equivalent_temperature();
    rec.output("eta_off", chain.eta_off(), "1")
        .output("eta_on", chain.eta_on(), "1")
        .output("vacuum", v, "K")
        .output("quantum_limit_total", 2.0 * v, "K");

    if let Some(e) = a.efficiency {
        if !(e > 0.0 && e <= 1.0) {
            return Err(jpa_core::Error::Domain(format!("efficiency must be in (0, 1], got {e}")).into());
        }
        let ratio = 1.0 / e - 1.0;
        let inputs = ExpectedNoiseInputs::with_vacuum_input(gain, ratio, eta_s, t_hemt, a.frequency)?;
        rec.output("expected_total_input_noise", expected_total_input_noise(&inputs)?, "K")
            .output(
                "device_quantum_limit",
                device_quantum_limit(ratio, a.frequency)?.equivalent_temperature(),
                "K",
            );
    }
    if let Some(s) = a.s_on {
        let r = refer_to_input(s, chain.eta_on(), t_hemt, a.frequency)?;
        rec.output("on_total", r.total, "K")
            .output("on_input_noise", r.input_noise, "K")
            .output("on_loss_term", r.loss_term, "K")
            .output("on_hemt_term", r.hemt_term, "K");
    }
    if let Some(s) = a.s_off {
        let r = refer_to_input(s, chain.eta_off(), t_hemt, a.frequency)?;
        rec.output("off_total", r.total, "K")
            .output("off_input_noise", r.input_noise, "K")
            .output("off_loss_term", r.loss_term, "K")
            .output("off_hemt_term", r.hemt_term, "K");
    }
    Ok(rec)
}

pub fn delta_snr(a: &DeltaSnrArgs, config: &Config) -> CliResult<ResultRecord> {
    let (on_text, on_bytes) = read_text(&a.on)?;
    let (off_text, off_bytes) = read_text(&a.off)?;
    let on = parse_spectrum_csv(&on_text)?;
    let off = parse_spectrum_csv(&off_text)?;
    let mut rec = ResultRecord::new("delta-snr");
    echo(&mut rec, a);
    rec.input_file("on", &on_bytes).input_file("off", &off_bytes);
    let pilot = a
        .pilot
        .or(on.pilot_frequency)
        .ok_or_else(|| usage("give --pilot or a `pilot_Hz` metadata line"))?;
    let eta_c_off = require(a.eta_c_off, config.eta_c_off, "eta-c-off", "eta_c_off")?;

    let cmp = compare_snr(&on, &off, pilot)?;
    let g = gain_from_pilot(cmp.on.power, cmp.off.power, eta_c_off)?;
    rec.output("delta_snr", cmp.delta_snr, "dB")
        .output("snr_on", cmp.on.snr_db(), "dB")
        .output("snr_off", cmp.off.snr_db(), "dB")
        .output("floor_on", cmp.on.floor_dbm, "dBm")
        .output("floor_off", cmp.off.floor_dbm, "dBm")
        .output("pilot_on", cmp.on.power, "W")
        .output("pilot_off", cmp.off.power, "W")
        .output("gain", g, "1")
        .output("gain_db", linear_to_db(g), "dB");
    match on.fit_gain_shape() {
        Ok(shape) => {
            rec.output_with_sigma("gain_center", shape.center, shape.sigma_center, "Hz")
                .output_with_sigma("gain_fwhm", shape.fwhm, shape.sigma_fwhm, "Hz");
        }
        Err(e) => {
            rec.warn(format!("gain line shape not fitted: {e}"));
        }
    }
    Ok(rec)
}
