use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// JSON has no infinities or NaN; those are written as strings.
mod num {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    pub(super) enum Repr {
        Number(f64),
        Text(String),
    }

    pub(super) fn to_repr(x: f64) -> Repr {
        if x.is_finite() {
            Repr::Number(x)
        } else if x.is_nan() {
            Repr::Text("nan".into())
        } else if x > 0.0 {
            Repr::Text("inf".into())
        } else {
            Repr::Text("-inf".into())
        }
    }

    pub(super) fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Number(x) => Ok(x),
            Repr::Text(s) => match s.as_str() {
                "nan" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(E::custom(format!("`{other}` is not a number"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }

    pub mod opt {
        use super::*;

        pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            x.map(to_repr).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Option::<Repr>::deserialize(d)?.map(from_repr).transpose()
        }
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(x: &[f64], s: S) -> Result<S::Ok, S::Error> {
            x.iter().map(|v| to_repr(*v)).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Vec::<Repr>::deserialize(d)?.into_iter().map(from_repr).collect()
        }
    }
}

/// A scalar output with its unit and optional one-sigma uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    #[serde(with = "num")]
    pub value: f64,
    pub unit: String,
    #[serde(with = "num::opt", default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

/// A named vector of values sharing one unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub unit: String,
    #[serde(with = "num::vec")]
    pub values: Vec<f64>,
}

/// Axis of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub label: String,
    pub unit: String,
    #[serde(with = "num::vec")]
    pub values: Vec<f64>,
}

/// Scalar field on a rectangular grid, row-major with rows along `y`.
/// Missing cells are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x: GridAxis,
    pub y: GridAxis,
    pub unit: String,
    pub values: Vec<Option<f64>>,
}

impl Grid {
    pub fn new(x: GridAxis, y: GridAxis, unit: impl Into<String>, values: Vec<Option<f64>>) -> Result<Self> {
        if values.len() != x.values.len() * y.values.len() {
            return Err(Error::Validation(format!(
                "grid has {} cells for {}×{} axes",
                values.len(),
                y.values.len(),
                x.values.len()
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Validation("grid cells must be finite or missing".into()));
        }
        Ok(Self {
            x,
            y,
            unit: unit.into(),
            values,
        })
    }

    pub fn at(&self, row: usize, col: usize) -> Option<f64> {
        self.values[row * self.x.values.len() + col]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` when set.
    pub timestamp: u64,
}

/// Structured result of one command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub command: String,
    /// Parameters as given.
    pub inputs: BTreeMap<String, serde_json::Value>,
    /// SHA-256 of each input file, hex.
    pub input_digests: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, Quantity>,
    #[serde(default)]
    pub series: BTreeMap<String, Series>,
    #[serde(default)]
    pub grids: BTreeMap<String, Grid>,
    /// SHA-256 of each file the command wrote, hex.
    #[serde(default)]
    pub artifacts: BTreeMap<String, String>,
    #[serde(default)]
    pub warnings: Vec<String>,
    pub provenance: Provenance,
    /// SHA-256 of the record with `timestamp` zeroed and this field empty.
    pub digest: String,
}

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.parse().ok()) {
        return t;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl ResultRecord {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            inputs: BTreeMap::new(),
            input_digests: BTreeMap::new(),
            outputs: BTreeMap::new(),
            series: BTreeMap::new(),
            grids: BTreeMap::new(),
            artifacts: BTreeMap::new(),
            warnings: Vec::new(),
            provenance: Provenance {
                tool: "jpa".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                seed: None,
                timestamp: timestamp(),
            },
            digest: String::new(),
        }
    }

    pub fn input(&mut self, name: &str, value: impl Serialize) -> &mut Self {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.inputs.insert(name.into(), v);
        self
    }

    pub fn input_file(&mut self, name: &str, bytes: &[u8]) -> &mut Self {
        self.input_digests.insert(name.into(), sha256_hex(bytes));
        self
    }

    pub fn artifact(&mut self, name: &str, bytes: &[u8]) -> &mut Self {
        self.artifacts.insert(name.into(), sha256_hex(bytes));
        self
    }

    pub fn output(&mut self, name: &str, value: f64, unit: &str) -> &mut Self {
        self.outputs.insert(
            name.into(),
            Quantity {
                value,
                unit: unit.into(),
                sigma: None,
            },
        );
        self
    }

    pub fn output_with_sigma(&mut self, name: &str, value: f64, sigma: f64, unit: &str) -> &mut Self {
        self.outputs.insert(
            name.into(),
            Quantity {
                value,
                unit: unit.into(),
                sigma: Some(sigma),
            },
        );
        self
    }

    pub fn series(&mut self, name: &str, unit: &str, values: Vec<f64>) -> &mut Self {
        self.series.insert(
            name.into(),
            Series {
                unit: unit.into(),
                values,
            },
        );
        self
    }

    pub fn grid(&mut self, name: &str, grid: Grid) -> &mut Self {
        self.grids.insert(name.into(), grid);
        self
    }

    pub fn warn(&mut self, message: impl Into<String>) -> &mut Self {
        self.warnings.push(message.into());
        self
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.provenance.seed = Some(seed);
        self
    }

    /// Digest over everything except the timestamp.
    pub fn compute_digest(&self) -> String {
        let mut copy = self.clone();
        copy.provenance.timestamp = 0;
        copy.digest = String::new();
        let bytes = serde_json::to_vec(&copy).expect("record serialises");
        sha256_hex(&bytes)
    }

    /// Fills in the digest and returns the record.
    pub fn finish(mut self) -> Self {
        self.digest = self.compute_digest();
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("record serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }

    /// Checks the invariants: units on every output, digest matches.
    pub fn validate(&self) -> Result<()> {
        if let Some((k, _)) = self.outputs.iter().find(|(_, q)| q.unit.is_empty()) {
            return Err(Error::Validation(format!("output `{k}` has no unit")));
        }
        if let Some((k, _)) = self.series.iter().find(|(_, s)| s.unit.is_empty()) {
            return Err(Error::Validation(format!("series `{k}` has no unit")));
        }
        if !self.digest.is_empty() && self.digest != self.compute_digest() {
            return Err(Error::Validation("record digest does not match its content".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ResultRecord {
        let mut r = ResultRecord::new("test");
        r.input("seed", 7)
            .input_file("trace", b"abc")
            .output("f_r", 5.9e9 + 0.123, "Hz")
            .output_with_sigma("R_J", f64::INFINITY, f64::INFINITY, "ohm")
            .series("f", "Hz", vec![1.0, 2.0, f64::NAN])
            .seed(7);
        r.finish()
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let r = sample();
        let back = ResultRecord::from_json(&r.to_json()).unwrap();
        assert_eq!(back.outputs["f_r"], r.outputs["f_r"]);
        assert!(back.outputs["R_J"].value.is_infinite());
        assert!(back.series["f"].values[2].is_nan());
        assert_eq!(back.digest, r.digest);
        back.validate().unwrap();
    }

    #[test]
    fn digest_ignores_timestamp() {
        let a = sample();
        let mut b = a.clone();
        b.provenance.timestamp += 1000;
        assert_eq!(a.compute_digest(), b.compute_digest());
        b.outputs.get_mut("f_r").unwrap().value += 1.0;
        assert_ne!(a.compute_digest(), b.compute_digest());
    }

    #[test]
    fn file_digest_is_sha256() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn unitless_output_rejected() {
        let mut r = ResultRecord::new("x");
        r.output("a", 1.0, "");
        assert!(r.validate().is_err());
    }

    proptest::proptest! {
        #[test]
        fn json_round_trip_keeps_digest(values in proptest::collection::vec(proptest::num::f64::ANY, 1..40)) {
            let mut r = ResultRecord::new("x");
            r.series("v", "1", values.clone());
            for (i, v) in values.iter().enumerate() {
                r.output(&format!("o{i}"), *v, "1");
            }
            let r = r.finish();
            let back = ResultRecord::from_json(&r.to_json()).unwrap();
            proptest::prop_assert!(back.validate().is_ok());
            proptest::prop_assert_eq!(back.digest, r.digest);
        }
    }
}
