use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::resonance::ComplexReflectionTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DataFormat {
    Ri,
    Ma,
    Db,
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Reads a one-port Touchstone v1 file.
///
/// The option line `# <Hz|kHz|MHz|GHz> S <RI|MA|DB> R <ohms>` may list its
/// tokens in any order; missing tokens default to `GHz`, `MA` and 50 Ω.
/// Text after `!` is a comment.
pub fn parse_touchstone_s1p(text: &str) -> Result<ComplexReflectionTrace> {
    let mut scale = 1e9;
    let mut format = DataFormat::Ma;
    let mut seen_options = false;
    let mut freqs = Vec::new();
    let mut s11 = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('!').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(opts) = line.strip_prefix('#') {
            if seen_options {
                return Err(parse_error(line_no, "second option line"));
            }
            seen_options = true;
            let tokens: Vec<String> = opts.split_whitespace().map(|t| t.to_ascii_uppercase()).collect();
            let mut i = 0;
            while i < tokens.len() {
                match tokens[i].as_str() {
                    "HZ" => scale = 1.0,
                    "KHZ" => scale = 1e3,
                    "MHZ" => scale = 1e6,
                    "GHZ" => scale = 1e9,
                    "S" => {}
                    "RI" => format = DataFormat::Ri,
                    "MA" => format = DataFormat::Ma,
                    "DB" => format = DataFormat::Db,
                    "R" => {
                        let r = tokens
                            .get(i + 1)
                            .and_then(|t| t.parse::<f64>().ok())
                            .ok_or_else(|| parse_error(line_no, "R must be followed by a resistance"))?;
                        if !(r > 0.0) {
                            return Err(parse_error(
                                line_no,
                                format!("reference resistance {r} must be positive"),
                            ));
                        }
                        i += 1;
                    }
                    "Y" | "Z" | "H" | "G" => {
                        return Err(parse_error(
                            line_no,
                            format!("parameter type {} is not supported", tokens[i]),
                        ));
                    }
                    other => return Err(parse_error(line_no, format!("unknown option token `{other}`"))),
                }
                i += 1;
            }
            continue;
        }
        let values = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| parse_error(line_no, format!("`{t}` is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != 3 {
            return Err(parse_error(
                line_no,
                format!("one-port rows need 3 numbers, found {}", values.len()),
            ));
        }
        let z = match format {
            DataFormat::Ri => Complex64::new(values[1], values[2]),
            DataFormat::Ma => Complex64::from_polar(values[1], values[2] * PI / 180.0),
            DataFormat::Db => Complex64::from_polar(10f64.powf(values[1] / 20.0), values[2] * PI / 180.0),
        };
        freqs.push(values[0] * scale);
        s11.push(z);
    }
    if !seen_options {
        return Err(parse_error(1, "missing `#` option line"));
    }
    ComplexReflectionTrace::new(freqs, s11)
}

/// Writes a trace as `# Hz S RI R 50`, with shortest round-trip number
/// formatting so that reading it back is lossless.
pub fn write_touchstone_s1p(trace: &ComplexReflectionTrace) -> String {
    let mut out = String::new();
    if let Some(p) = trace.probe_power_dbm {
        let _ = writeln!(out, "! probe_power_dBm {p}");
    }
    if let Some(v) = trace.gate_voltage {
        let _ = writeln!(out, "! gate_voltage_V {v}");
    }
    out.push_str("# Hz S RI R 50\n");
    for (f, z) in trace.frequencies().iter().zip(trace.s11()) {
        let _ = writeln!(out, "{f:?} {:?} {:?}", z.re, z.im);
    }
    out
}
