use std::path::{Path, PathBuf};

use fanet_aka::primitives::FuzzyExtractorParams;
use fanet_aka::ProtocolConfig;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub seed: u64,
    pub delta_t: u32,
    pub fe_k: usize,
    pub fe_r: usize,
    pub puf_noise: f64,
    pub depth: usize,
    pub format: Format,
    pub state_dir: PathBuf,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            seed: 0,
            delta_t: 2,
            fe_k: 32,
            fe_r: 5,
            puf_noise: 0.0,
            depth: 4,
            format: Format::Json,
            state_dir: PathBuf::from("fanet-state"),
        }
    }
}

/// Every key optional; absent keys keep their defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    seed: Option<u64>,
    delta_t: Option<u32>,
    fe_k: Option<usize>,
    fe_r: Option<usize>,
    puf_noise: Option<f64>,
    depth: Option<usize>,
    format: Option<String>,
    state_dir: Option<PathBuf>,
}

fn parse_key_values(text: &str) -> Result<ConfigFile, String> {
    let mut map = serde_json::Map::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value", n + 1))?;
        let v = v.trim();
        let value = match v.parse::<serde_json::Number>() {
            Ok(num) => serde_json::Value::Number(num),
            Err(_) => serde_json::Value::String(v.to_string()),
        };
        map.insert(k.trim().replace('-', "_"), value);
    }
    serde_json::from_value(serde_json::Value::Object(map)).map_err(|e| e.to_string())
}

fn parse_format(s: &str) -> Result<Format, String> {
    match s {
        "json" => Ok(Format::Json),
        "table" => Ok(Format::Table),
        other => Err(format!("unknown format {other:?}")),
    }
}

impl CliConfig {
    /// Reads a JSON object or `key=value` lines.
    pub fn load(path: &Path) -> Result<CliConfig, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|_| CliError::MissingState(path.into()))?;
        let malformed = |e: String| CliError::MalformedConfig(format!("{}: {e}", path.display()));
        let file = if text.trim_start().starts_with('{') {
            serde_json::from_str::<ConfigFile>(&text).map_err(|e| malformed(e.to_string()))?
        } else {
            parse_key_values(&text).map_err(malformed)?
        };
        let mut c = CliConfig::default();
        if let Some(v) = file.seed {
            c.seed = v;
        }
        if let Some(v) = file.delta_t {
            c.delta_t = v;
        }
        if let Some(v) = file.fe_k {
            c.fe_k = v;
        }
        if let Some(v) = file.fe_r {
            c.fe_r = v;
        }
        if let Some(v) = file.puf_noise {
            c.puf_noise = v;
        }
        if let Some(v) = file.depth {
            c.depth = v;
        }
        if let Some(v) = file.format {
            c.format = parse_format(&v).map_err(malformed)?;
        }
        if let Some(v) = file.state_dir {
            c.state_dir = v;
        }
        c.protocol()?;
        Ok(c)
    }

    pub fn protocol(&self) -> Result<ProtocolConfig, CliError> {
        let fe = FuzzyExtractorParams::new(self.fe_k, self.fe_r)
            .map_err(|e| CliError::MalformedConfig(e.to_string()))?;
        if !(0.0..=0.5).contains(&self.puf_noise) {
            return Err(CliError::MalformedConfig(
                "puf_noise must lie in [0, 0.5]".into(),
            ));
        }
        Ok(ProtocolConfig {
            delta_t: self.delta_t,
            fe,
            puf_noise: self.puf_noise,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_value_and_json_agree() {
        let kv = parse_key_values("seed = 7\n# comment\ndelta-t=3\nformat=table\n").unwrap();
        let js: ConfigFile =
            serde_json::from_str(r#"{"seed":7,"delta_t":3,"format":"table"}"#).unwrap();
        assert_eq!(
            (kv.seed, kv.delta_t, kv.format),
            (js.seed, js.delta_t, js.format)
        );
    }

    #[test]
    fn unknown_keys_are_malformed() {
        assert!(parse_key_values("colour=blue").is_err());
        assert!(parse_key_values("no equals sign").is_err());
    }
}
