mod fit;
mod noise;
mod plot;
mod simulate;

use std::f64::consts::PI;
use std::path::Path;

use jpa_core::io::ResultRecord;
use serde::Serialize;

use crate::args::{Command, SimulateCommand};
use crate::config::Config;
use crate::{CliError, CliResult};

pub fn dispatch(command: &Command, config: &Config) -> CliResult<ResultRecord> {
    match command {
        Command::FitResonance(a) => fit::fit_resonance(a),
        Command::FitCircuit(a) => fit::fit_circuit(a, config),
        Command::KerrExtract(a) => fit::kerr_extract(a),
        Command::KerrPredict(a) => fit::kerr_predict(a, config),
        Command::CalibrateHemt(a) => fit::calibrate_hemt(a),
        Command::GainMap(a) => simulate::gain_map(a),
        Command::EstimateAttenuation(a) => noise::estimate_attenuation(a, config),
        Command::ReferNoise(a) => noise::refer_noise(a, config),
        Command::DeltaSnr(a) => noise::delta_snr(a, config),
        Command::Simulate(SimulateCommand::Reflection(a)) => simulate::reflection(a),
        Command::Simulate(SimulateCommand::Spectrum(a)) => simulate::spectrum(a, config),
        Command::Simulate(SimulateCommand::GateSweep(a)) => simulate::gate_sweep(a, config),
        Command::Plot(a) => plot::plot(a),
    }
}

pub fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_text(path: &Path) -> CliResult<(String, Vec<u8>)> {
    let bytes = read_file(path)?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| jpa_core::Error::Parse {
        line: 0,
        message: format!("{} is not UTF-8 text", path.display()),
    })?;
    Ok((text, bytes))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `bytes` to `path` and lists the file in the record.
fn emit(record: &mut ResultRecord, path: &Path, bytes: &[u8]) -> CliResult<()> {
    write_file(path, bytes)?;
    record.artifact(&path.display().to_string(), bytes);
    Ok(())
}

/// Copies every field of `args` into the record's inputs.
fn echo<T: Serialize>(record: &mut ResultRecord, args: &T) {
    if let Ok(serde_json::Value::Object(map)) = serde_json::to_value(args) {
        for (k, v) in map {
            if !v.is_null() {
                record.inputs.insert(k, v);
            }
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn angular(hz: f64) -> f64 {
    2.0 * PI * hz
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
