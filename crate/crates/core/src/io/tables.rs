use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::chain::SpectrumTrace;
use crate::error::{Error, Result};
use crate::resonance::ComplexReflectionTrace;
use crate::simulator::GateSweepRow;

/// Documented CSV layouts. Column suffixes carry the unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    /// `f_Hz,re,im`
    Reflection,
    /// `Vg_V,fr_Hz,kappa_i_Hz,kappa_ex_Hz` (rates as κ/2π)
    GateSweep,
    /// `Pin_dBm,fr_Hz`, optional `fs_Hz`
    PowerSweep,
    /// `Tset_K,psd_K`
    HemtSweep,
    /// `f_Hz,psd_dBm`
    Spectrum,
}

impl Schema {
    pub fn columns(&self) -> &'static [&'static str] {
        match self {
            Schema::Reflection => &["f_Hz", "re", "im"],
            Schema::GateSweep => &["Vg_V", "fr_Hz", "kappa_i_Hz", "kappa_ex_Hz"],
            Schema::PowerSweep => &["Pin_dBm", "fr_Hz"],
            Schema::HemtSweep => &["Tset_K", "psd_K"],
            Schema::Spectrum => &["f_Hz", "psd_dBm"],
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "reflection" => Schema::Reflection,
            "gate-sweep" => Schema::GateSweep,
            "power-sweep" => Schema::PowerSweep,
            "hemt-sweep" => Schema::HemtSweep,
            "spectrum" => Schema::Spectrum,
            other => return Err(Error::Schema(format!("unknown schema `{other}`"))),
        })
    }
}

/// Accepted spellings for some mandatory columns.
fn aliases(column: &str) -> &'static [&'static str] {
    match column {
        "Tset_K" => &["T_set_K"],
        _ => &[],
    }
}

const UNIT_SUFFIXES: [&str; 5] = ["Hz", "dBm", "K", "V", "W"];

fn stem_and_unit(name: &str) -> (&str, &str) {
    match name.rsplit_once('_') {
        Some((s, u)) if !s.is_empty() => (s, u),
        _ => (name, ""),
    }
}

/// Parsed numeric table with named columns and `# key = value` metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Index of each mandatory column (canonical name) in `headers`.
    pub index: BTreeMap<String, usize>,
    pub metadata: BTreeMap<String, String>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self
            .index
            .get(name)
            .copied()
            .or_else(|| self.headers.iter().position(|h| h == name))?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    fn required(&self, name: &str) -> Vec<f64> {
        self.column(name).expect("mandatory column checked at parse time")
    }
}

/// Reads a CSV table and checks it against `schema`.
pub fn parse_table(text: &str, schema: Schema) -> Result<Table> {
    let mut metadata = BTreeMap::new();
    for line in text.lines() {
        if let Some(rest) = line.trim().strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=').or_else(|| rest.split_once(':')) {
                metadata.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();

    for h in &headers {
        let (_, unit) = stem_and_unit(h);
        let lowered = unit.to_ascii_lowercase();
        let looks_like_unit = ["ghz", "mhz", "khz", "mk", "mv", "mw", "dbw", "s"].contains(&lowered.as_str());
        if looks_like_unit && !UNIT_SUFFIXES.contains(&unit) {
            return Err(Error::Schema(format!(
                "column `{h}` uses unit `{unit}`; only SI suffixes ({}) are accepted",
                UNIT_SUFFIXES.join(", ")
            )));
        }
    }
    let mut index = BTreeMap::new();
    for &col in schema.columns() {
        let pos = headers
            .iter()
            .position(|h| h == col || aliases(col).contains(&h.as_str()));
        match pos {
            Some(p) => {
                index.insert(col.to_string(), p);
            }
            None => return Err(Error::Schema(format!("missing mandatory column `{col}`"))),
        }
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != headers.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                cell.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("column `{}`: `{cell}` is not a number", headers[c]),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(Table {
        headers,
        rows,
        index,
        metadata,
    })
}

pub fn parse_reflection_csv(text: &str) -> Result<ComplexReflectionTrace> {
    let t = parse_table(text, Schema::Reflection)?;
    let (re, im) = (t.required("re"), t.required("im"));
    let s = re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect();
    let mut trace = ComplexReflectionTrace::new(t.required("f_Hz"), s)?;
    if let Some(p) = t.metadata.get("probe_power_dBm").and_then(|v| v.parse().ok()) {
        trace = trace.with_probe_power_dbm(p);
    }
    if let Some(v) = t.metadata.get("gate_voltage_V").and_then(|v| v.parse().ok()) {
        trace = trace.with_gate_voltage(v);
    }
    Ok(trace)
}

pub fn write_reflection_csv(trace: &ComplexReflectionTrace) -> String {
    let mut out = String::new();
    if let Some(p) = trace.probe_power_dbm {
        let _ = writeln!(out, "# probe_power_dBm = {p:?}");
    }
    if let Some(v) = trace.gate_voltage {
        let _ = writeln!(out, "# gate_voltage_V = {v:?}");
    }
    out.push_str("f_Hz,re,im\n");
    for (f, z) in trace.frequencies().iter().zip(trace.s11()) {
        let _ = writeln!(out, "{f:?},{:?},{:?}", z.re, z.im);
    }
    out
}

/// Gate-sweep rows with rates converted to angular units.
pub fn parse_gate_sweep_csv(text: &str) -> Result<Vec<GateSweepRow>> {
    let t = parse_table(text, Schema::GateSweep)?;
    let (v, f, ki, kex) = (
        t.required("Vg_V"),
        t.required("fr_Hz"),
        t.required("kappa_i_Hz"),
        t.required("kappa_ex_Hz"),
    );
    Ok((0..v.len())
        .map(|i| GateSweepRow {
            gate_voltage: v[i],
            f_r: f[i],
            kappa_i: 2.0 * PI * ki[i],
            kappa_ex: 2.0 * PI * kex[i],
        })
        .collect())
}

pub fn write_gate_sweep_csv(rows: &[GateSweepRow]) -> String {
    let mut out = String::from("Vg_V,fr_Hz,kappa_i_Hz,kappa_ex_Hz\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{:?},{:?},{:?},{:?}",
            r.gate_voltage,
            r.f_r,
            r.kappa_i / (2.0 * PI),
            r.kappa_ex / (2.0 * PI)
        );
    }
    out
}

/// One row of a power-sweep table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSweepRow {
    /// dBm at the device input.
    pub input_power_dbm: f64,
    /// Hz.
    pub resonant_frequency: f64,
    /// Hz; the resonance itself when the column is absent.
    pub signal_frequency: f64,
}

pub fn parse_power_sweep_csv(text: &str) -> Result<Vec<PowerSweepRow>> {
    let t = parse_table(text, Schema::PowerSweep)?;
    let p = t.required("Pin_dBm");
    let f = t.required("fr_Hz");
    let fs = t.column("fs_Hz").unwrap_or_else(|| f.clone());
    Ok((0..p.len())
        .map(|i| PowerSweepRow {
            input_power_dbm: p[i],
            resonant_frequency: f[i],
            signal_frequency: fs[i],
        })
        .collect())
}

pub fn write_power_sweep_csv(rows: &[PowerSweepRow]) -> String {
    let mut out = String::from("Pin_dBm,fr_Hz,fs_Hz\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{:?},{:?},{:?}",
            r.input_power_dbm, r.resonant_frequency, r.signal_frequency
        );
    }
    out
}

/// `(T_set, psd)` pairs, both in kelvin.
pub fn parse_hemt_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    let t = parse_table(text, Schema::HemtSweep)?;
    Ok(t.required("Tset_K").into_iter().zip(t.required("psd_K")).collect())
}

pub fn write_hemt_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("Tset_K,psd_K\n");
    for (t, p) in rows {
        let _ = writeln!(out, "{t:?},{p:?}");
    }
    out
}

/// Spectrum table. Metadata comes from comment lines: `rbw_Hz`, `pump_on`,
/// `pump_Hz`, `pilot_Hz`, `pilot_dBm`. Without `rbw_Hz` the bin spacing is
/// used.
pub fn parse_spectrum_csv(text: &str) -> Result<SpectrumTrace> {
    let t = parse_table(text, Schema::Spectrum)?;
    let f = t.required("f_Hz");
    let p = t.required("psd_dBm");
    let num = |k: &str| -> Result<Option<f64>> {
        t.metadata
            .get(k)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::Schema(format!("metadata `{k}` = `{v}` is not a number")))
            })
            .transpose()
    };
    let rbw = match num("rbw_Hz")? {
        Some(r) => r,
        None if f.len() > 1 => f[1] - f[0],
        None => return Err(Error::Schema("single-bin spectrum needs `rbw_Hz` metadata".into())),
    };
    let mut trace = SpectrumTrace::new(f, p, rbw)?;
    if let Some(on) = t.metadata.get("pump_on") {
        let on = match on.as_str() {
            "true" | "1" | "on" => true,
            "false" | "0" | "off" => false,
            other => return Err(Error::Schema(format!("pump_on = `{other}` is not a boolean"))),
        };
        trace = trace.with_pump(on, num("pump_Hz")?);
    }
    if let Some(pf) = num("pilot_Hz")? {
        trace = trace.with_pilot(pf, num("pilot_dBm")?);
    }
    Ok(trace)
}

pub fn write_spectrum_csv(trace: &SpectrumTrace) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# rbw_Hz = {:?}", trace.rbw);
    if let Some(on) = trace.pump_on {
        let _ = writeln!(out, "# pump_on = {on}");
    }
    if let Some(f) = trace.pump_frequency {
        let _ = writeln!(out, "# pump_Hz = {f:?}");
    }
    if let Some(f) = trace.pilot_frequency {
        let _ = writeln!(out, "# pilot_Hz = {f:?}");
    }
    if let Some(p) = trace.pilot_power_dbm {
        let _ = writeln!(out, "# pilot_dBm = {p:?}");
    }
    out.push_str("f_Hz,psd_dBm\n");
    for (f, p) in trace.frequencies().iter().zip(trace.psd_dbm()) {
        let _ = writeln!(out, "{f:?},{p:?}");
    }
    out
}
