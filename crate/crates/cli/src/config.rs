//! JSON experiment configuration: training keys at the top level, plus
//! optional `noise` and `synth` sections.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use ssr_core::{NoiseSpec, SynthSpec, TrainConfig};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub train: TrainConfig,
    pub noise: Option<NoiseSpec>,
    pub synth: Option<SynthSpec>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if let Some(n) = &self.noise {
            n.validate()?;
        }
        if let Some(s) = &self.synth {
            s.validate()?;
        }
        Ok(())
    }

    /// The synthetic spec to generate from, defaulted when absent.
    pub fn synth_or_default(&self) -> SynthSpec {
        self.synth.clone().unwrap_or_default()
    }

    /// Flat JSON echo of every resolved value, in the same layout the parser
    /// accepts.
    pub fn to_json(&self) -> Value {
        let mut root = match serde_json::to_value(&self.train).expect("serializable") {
            Value::Object(m) => m,
            _ => unreachable!("TrainConfig serializes to an object"),
        };
        if let Some(n) = &self.noise {
            root.insert("noise".into(), serde_json::to_value(n).expect("serializable"));
        }
        if let Some(s) = &self.synth {
            root.insert("synth".into(), serde_json::to_value(s).expect("serializable"));
        }
        Value::Object(root)
    }
}

fn known_keys<T: Default + Serialize>() -> Vec<String> {
    match serde_json::to_value(T::default()).expect("serializable") {
        Value::Object(m) => m.keys().cloned().collect(),
        _ => Vec::new(),
    }
}

fn check_keys<T: Default + Serialize>(obj: &Map<String, Value>, prefix: &str) -> Result<()> {
    let known = known_keys::<T>();
    match obj.keys().find(|k| !known.contains(k)) {
        Some(k) => Err(CliError::UnknownKey(format!("{prefix}{k}"))),
        None => Ok(()),
    }
}

fn section<T: Default + Serialize + DeserializeOwned>(value: Value, name: &str) -> Result<T> {
    let Value::Object(obj) = value else {
        return Err(CliError::Range(format!("`{name}` must be an object")));
    };
    let prefix = if name.is_empty() { String::new() } else { format!("{name}.") };
    check_keys::<T>(&obj, &prefix)?;
    serde_json::from_value(Value::Object(obj)).map_err(|e| CliError::Range(format!("{prefix}{e}")))
}

/// Parses a configuration document, applies defaults and validates ranges.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let Value::Object(mut root) = value else {
        return Err(CliError::Parse {
            line: 1,
            column: 1,
            message: "top level must be a JSON object".into(),
        });
    };
    let noise = root.remove("noise").map(|v| section::<NoiseSpec>(v, "noise")).transpose()?;
    let synth = root.remove("synth").map(|v| section::<SynthSpec>(v, "synth")).transpose()?;
    let train = section::<TrainConfig>(Value::Object(root), "")?;
    let cfg = ExperimentConfig { train, noise, synth };
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}
