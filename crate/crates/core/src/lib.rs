//! Characterisation toolkit for gate-tunable Josephson parametric
//! amplifiers: resonator fitting, circuit and Kerr models, amplifier noise
//! theory, measurement-chain calibration and a synthetic instrument.
//!
//! Units are SI throughout. Decay rates and detunings are angular (s⁻¹);
//! frequencies are in Hz; noise is in kelvin.

// Guards are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod circuit;
pub mod constants;
pub mod error;
pub mod io;
pub mod kerr;
pub mod lsq;
pub mod paramp;
pub mod resonance;
pub mod roots;
pub mod simulator;

pub use chain::{NoiseChain, SpectrumTrace};
pub use circuit::{CircuitModel, JunctionState};
pub use error::{Error, Result};
pub use io::ResultRecord;
pub use kerr::{KerrEstimate, PowerSweepPoint};
pub use paramp::{GainPair, NoiseSpectralDensity};
pub use resonance::{ComplexReflectionTrace, ResonatorFit};
pub use simulator::{GateMap, KerrCavity, PumpDrive};
