use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Josephson parametric amplifier characterisation.
///
/// Rates on the command line (`--kappa-*`, `--kerr`) are ordinary
/// frequencies in Hz, i.e. the angular rate divided by 2π. The record
/// reports both.
#[derive(Debug, Parser)]
#[command(name = "jpa", version, about)]
pub struct Cli {
    /// TOML file with chain and circuit constants; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the result record here as well as to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a one-port reflection trace (.s1p or reflection CSV).
    FitResonance(FitResonanceArgs),
    /// Fit line loss, junction resistance and coupling capacitance to a gate sweep.
    FitCircuit(FitCircuitArgs),
    /// Kerr constant from a probe-power sweep.
    KerrExtract(KerrExtractArgs),
    /// Kerr constant predicted from the circuit model.
    KerrPredict(KerrPredictArgs),
    /// Signal gain over a grid of pump power and pump frequency.
    GainMap(GainMapArgs),
    /// HEMT noise from a thermal-source sweep.
    CalibrateHemt(CalibrateHemtArgs),
    /// Line attenuation from the thermal noise floor.
    EstimateAttenuation(EstimateAttenuationArgs),
    /// Chain transmissions, expected noise and input referral.
    ReferNoise(ReferNoiseArgs),
    /// Pilot-tone SNR improvement and gain from pump-on/off spectra.
    DeltaSnr(DeltaSnrArgs),
    /// Synthetic data.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Render a plot of a result record.
    Plot(PlotArgs),
}

#[derive(Debug, Subcommand)]
pub enum SimulateCommand {
    /// Kerr-cavity reflection trace.
    Reflection(SimReflectionArgs),
    /// Pump-on and pump-off spectra at the HEMT plane.
    Spectrum(SimSpectrumArgs),
    /// Resonance and rates over a gate-voltage sweep.
    GateSweep(SimGateSweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchArg {
    Low,
    High,
}

impl From<BranchArg> for jpa_core::simulator::Branch {
    fn from(b: BranchArg) -> Self {
        match b {
            BranchArg::Low => Self::Low,
            BranchArg::High => Self::High,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CavityArgs {
    /// Small-signal resonance, Hz.
    #[arg(long)]
    pub f_r: f64,
    /// Internal loss rate κ_i/2π, Hz.
    #[arg(long)]
    pub kappa_i: f64,
    /// External coupling rate κ_ex/2π, Hz.
    #[arg(long)]
    pub kappa_ex: f64,
    /// Kerr constant K/2π, Hz (negative).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub kerr: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct FitResonanceArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// SVG of |S11| data and fit.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct FitCircuitArgs {
    /// Gate-sweep CSV.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Geometric resonance, Hz.
    #[arg(long)]
    pub f_geo: Option<f64>,
    /// Bare resonance, Hz. Defaults to the middle of the f0 band.
    #[arg(long)]
    pub f0: Option<f64>,
    /// Lower end of the f0 band, Hz.
    #[arg(long)]
    pub f0_min: Option<f64>,
    /// Upper end of the f0 band, Hz.
    #[arg(long)]
    pub f0_max: Option<f64>,
    /// Number of f0 values across the band.
    #[arg(long, default_value_t = 10)]
    pub grid: usize,
    /// SVG of the κ_i envelope over the band.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct KerrExtractArgs {
    /// Power-sweep CSV.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// κ_i/2π, Hz.
    #[arg(long)]
    pub kappa_i: f64,
    /// κ_ex/2π, Hz.
    #[arg(long)]
    pub kappa_ex: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct KerrPredictArgs {
    /// Junction critical current, A.
    #[arg(long)]
    pub ic: Option<f64>,
    /// Measured resonance, Hz (alternative to --ic).
    #[arg(long)]
    pub f_r: Option<f64>,
    /// Bare resonance, Hz.
    #[arg(long)]
    pub f0: Option<f64>,
    /// Geometric resonance, Hz. Defaults to f0.
    #[arg(long)]
    pub f_geo: Option<f64>,
    /// Line impedance, Ω. Defaults to 50 Ω · f_geo/f0.
    #[arg(long)]
    pub z0: Option<f64>,
    /// Band mode: lower end of f0, Hz.
    #[arg(long)]
    pub f0_min: Option<f64>,
    /// Band mode: upper end of f0, Hz.
    #[arg(long)]
    pub f0_max: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub grid: usize,
    /// Band mode: lowest resonance, Hz.
    #[arg(long)]
    pub fr_min: Option<f64>,
    /// Band mode: highest resonance, Hz.
    #[arg(long)]
    pub fr_max: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    /// SVG of the Kerr envelope (band mode).
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct GainMapArgs {
    #[command(flatten)]
    pub cavity: CavityArgs,
    /// Lowest pump power at the device, dBm. Defaults to 15 dB below critical.
    #[arg(long, allow_negative_numbers = true)]
    pub power_min_dbm: Option<f64>,
    /// Highest pump power, dBm. Defaults to 1 dB above critical.
    #[arg(long, allow_negative_numbers = true)]
    pub power_max_dbm: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub powers: usize,
    /// Lowest pump frequency, Hz. Defaults to f_r − 1.5 κ/2π.
    #[arg(long)]
    pub pump_min: Option<f64>,
    /// Highest pump frequency, Hz. Defaults to f_r + 0.5 κ/2π.
    #[arg(long)]
    pub pump_max: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub freqs: usize,
    /// Signal offset from the pump, Hz.
    #[arg(long, default_value_t = 1e4, allow_negative_numbers = true)]
    pub signal_offset: f64,
    #[arg(long, value_enum, default_value_t = BranchArg::Low)]
    pub branch: BranchArg,
    /// SVG gain map.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CalibrateHemtArgs {
    /// HEMT-sweep CSV.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Measurement frequency, Hz.
    #[arg(long)]
    pub frequency: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateAttenuationArgs {
    /// Source output power, dBm.
    #[arg(long, allow_negative_numbers = true)]
    pub signal_dbm: f64,
    /// Level of the signal above the noise floor at the device, dB.
    #[arg(long, allow_negative_numbers = true)]
    pub margin_db: f64,
    /// Noise temperature setting the floor, K.
    #[arg(long)]
    pub t_noise: f64,
    /// Resolution bandwidth, Hz.
    #[arg(long)]
    pub rbw: Option<f64>,
    /// Cavity insertion loss, dB.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub cavity_loss_db: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ReferNoiseArgs {
    /// Transmission from amplifier output to the HEMT plane.
    #[arg(long)]
    pub eta_s: Option<f64>,
    /// Cavity transmission with the pump off.
    #[arg(long)]
    pub eta_c_off: Option<f64>,
    /// HEMT noise at the mixing-chamber plane, K.
    #[arg(long)]
    pub t_hemt: Option<f64>,
    /// Net gain, dB.
    #[arg(long, allow_negative_numbers = true)]
    pub gain_db: f64,
    /// Hz.
    #[arg(long)]
    pub frequency: f64,
    /// Coupling efficiency κ_ex/κ; enables the expected-noise estimate.
    #[arg(long)]
    pub efficiency: Option<f64>,
    /// Measured pump-on noise at the HEMT plane, K.
    #[arg(long)]
    pub s_on: Option<f64>,
    /// Measured pump-off noise at the HEMT plane, K.
    #[arg(long)]
    pub s_off: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct DeltaSnrArgs {
    /// Pump-on spectrum CSV.
    #[arg(long)]
    pub on: PathBuf,
    /// Pump-off spectrum CSV.
    #[arg(long)]
    pub off: PathBuf,
    /// Pilot frequency, Hz. Defaults to the `pilot_Hz` metadata.
    #[arg(long)]
    pub pilot: Option<f64>,
    #[arg(long)]
    pub eta_c_off: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct SimReflectionArgs {
    #[command(flatten)]
    pub cavity: CavityArgs,
    /// Probe power at the device, dBm.
    #[arg(long, default_value_t = -140.0, allow_negative_numbers = true)]
    pub probe_dbm: f64,
    /// Frequency span, Hz. Defaults to 10 κ/2π.
    #[arg(long)]
    pub span: Option<f64>,
    #[arg(long, default_value_t = 401)]
    pub points: usize,
    /// Gaussian noise per quadrature.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = BranchArg::Low)]
    pub branch: BranchArg,
    /// Output trace, `.s1p` or `.csv`.
    #[arg(long)]
    pub trace: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SimSpectrumArgs {
    #[command(flatten)]
    pub cavity: CavityArgs,
    /// Pump frequency, Hz.
    #[arg(long)]
    pub pump: f64,
    /// Pump power at the device, dBm.
    #[arg(long, allow_negative_numbers = true)]
    pub pump_dbm: f64,
    /// Pilot frequency, Hz.
    #[arg(long)]
    pub pilot: f64,
    /// Pilot power at the device, dBm.
    #[arg(long, allow_negative_numbers = true)]
    pub pilot_dbm: f64,
    #[arg(long)]
    pub eta_s: Option<f64>,
    #[arg(long)]
    pub eta_c_off: Option<f64>,
    #[arg(long)]
    pub t_hemt: Option<f64>,
    /// Span centre, Hz. Defaults to the pilot.
    #[arg(long)]
    pub center: Option<f64>,
    #[arg(long, default_value_t = 401)]
    pub bins: usize,
    #[arg(long)]
    pub rbw: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub averages: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Pump-on spectrum CSV.
    #[arg(long)]
    pub on: PathBuf,
    /// Pump-off spectrum CSV.
    #[arg(long)]
    pub off: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SimGateSweepArgs {
    #[arg(long)]
    pub f_geo: Option<f64>,
    #[arg(long)]
    pub f0: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub alpha_l: f64,
    /// Junction shunt resistance, Ω.
    #[arg(long, default_value_t = 15e3)]
    pub r_j: f64,
    /// Coupling capacitance, F.
    #[arg(long, default_value_t = 5e-15)]
    pub c_k: f64,
    #[arg(long, default_value_t = -4.0, allow_negative_numbers = true)]
    pub v_min: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub v_max: f64,
    #[arg(long, default_value_t = 41)]
    pub points: usize,
    /// Gate-sweep CSV.
    #[arg(long)]
    pub table: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PlotArgs {
    /// Result record (JSON).
    #[arg(long)]
    pub record: PathBuf,
    /// Plot spec, `.json` or `.toml`.
    #[arg(long)]
    pub spec: PathBuf,
    /// SVG output.
    #[arg(long)]
    pub svg: PathBuf,
}
