use std::path::Path;

use serde::Deserialize;

use crate::{CliError, CliResult};

/// Chain and circuit constants read from a TOML file. Command-line flags
/// take precedence over every key.
///
/// ```toml
/// eta_s = 0.8
/// eta_c_off = 0.87
/// t_hemt_K = 1.61
/// attenuation_dB = -110.0
/// rbw_Hz = 3880.0
/// f_geo_Hz = 7.2e9
/// f0_Hz = 6.2e9
/// f0_min_Hz = 6.0e9
/// f0_max_Hz = 6.45e9
/// ```
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub eta_s: Option<f64>,
    pub eta_c_off: Option<f64>,
    #[serde(rename = "t_hemt_K")]
    pub t_hemt: Option<f64>,
    /// Source-to-device attenuation, dB (negative for loss).
    #[serde(rename = "attenuation_dB")]
    pub attenuation_db: Option<f64>,
    #[serde(rename = "rbw_Hz")]
    pub rbw: Option<f64>,
    #[serde(rename = "f_geo_Hz")]
    pub f_geo: Option<f64>,
    #[serde(rename = "f0_Hz")]
    pub f0: Option<f64>,
    #[serde(rename = "f0_min_Hz")]
    pub f0_min: Option<f64>,
    #[serde(rename = "f0_max_Hz")]
    pub f0_max: Option<f64>,
}

impl Config {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }
}

/// `flag`, else `config`, else a schema error naming both.
pub fn require(flag: Option<f64>, config: Option<f64>, flag_name: &str, key: &str) -> CliResult<f64> {
    flag.or(config).ok_or_else(|| {
        CliError::Core(jpa_core::Error::Schema(format!(
            "missing required value `--{flag_name}` (or config key `{key}`)"
        )))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_parse() {
        let c = Config::parse("eta_s = 0.8\nt_hemt_K = 1.61\n").unwrap();
        assert_eq!(c.eta_s, Some(0.8));
        assert_eq!(c.t_hemt, Some(1.61));
        assert_eq!(c.eta_c_off, None);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(matches!(Config::parse("eta = 0.8\n"), Err(CliError::Config(_))));
    }

    #[test]
    fn flag_overrides_config() {
        assert_eq!(require(Some(0.7), Some(0.8), "eta-s", "eta_s").unwrap(), 0.7);
        assert_eq!(require(None, Some(0.8), "eta-s", "eta_s").unwrap(), 0.8);
        let err = require(None, None, "eta-s", "eta_s").unwrap_err();
        assert_eq!(err.category(), "schema");
        assert!(err.to_string().contains("--eta-s"));
    }
}
