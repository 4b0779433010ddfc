use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use thiserror::Error;

use crate::models::{AmbientProfile, InitialConditions};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Parse failure; the message carries line, column and key.
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
}

/// Reads a TOML file into `T`; unknown keys are rejected by `T`.
pub fn load_toml<T: DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum ModelKind {
    A,
    B,
    #[serde(rename = "averaged")]
    Averaged,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::A => "A",
            ModelKind::B => "B",
            ModelKind::Averaged => "averaged",
        })
    }
}

/// Feedforward gain: a number, or `"auto"` for the fitted `K*`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(try_from = "RawGain")]
pub enum FeedforwardGain {
    Fixed(f64),
    Auto,
}

impl Default for FeedforwardGain {
    fn default() -> Self {
        FeedforwardGain::Fixed(0.0)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawGain {
    Number(f64),
    Word(String),
}

impl TryFrom<RawGain> for FeedforwardGain {
    type Error = String;

    fn try_from(raw: RawGain) -> Result<Self, String> {
        match raw {
            RawGain::Number(k) => Ok(FeedforwardGain::Fixed(k)),
            RawGain::Word(w) if w == "auto" => Ok(FeedforwardGain::Auto),
            RawGain::Word(w) => Err(format!("feedforward_K must be a number or \"auto\", got \"{w}\"")),
        }
    }
}

fn default_decimation() -> f64 {
    100.0
}

/// One simulation run.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub model: ModelKind,
    /// Seconds.
    pub duration: f64,
    pub ambient: AmbientProfile,
    #[serde(default, rename = "feedforward_K")]
    pub feedforward_k: FeedforwardGain,
    #[serde(default)]
    pub initial_state: InitialConditions,
    /// Output samples per second.
    #[serde(default = "default_decimation")]
    pub output_decimation: f64,
}

impl Scenario {
    /// Model B at constant 40 °C ambient for 20 s, starting at 30 °C.
    pub fn constant_ambient(model: ModelKind) -> Self {
        Self {
            model,
            duration: 20.0,
            ambient: AmbientProfile::constant(40.0),
            feedforward_k: FeedforwardGain::Fixed(0.0),
            initial_state: InitialConditions::default(),
            output_decimation: default_decimation(),
        }
    }

    /// Model B under the 0 → 80 °C ambient ramp over 800 s.
    pub fn ambient_ramp(feedforward_k: FeedforwardGain) -> Self {
        Self {
            model: ModelKind::B,
            duration: 800.0,
            ambient: AmbientProfile::Ramp {
                start: 0.0,
                end: 80.0,
                duration: 800.0,
            },
            feedforward_k,
            initial_state: InitialConditions::default(),
            output_decimation: 10.0,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("duration must be > 0, got {}", self.duration));
        }
        if !(self.output_decimation > 0.0 && self.output_decimation.is_finite()) {
            return bad(format!("output_decimation must be > 0, got {}", self.output_decimation));
        }
        if let AmbientProfile::Ramp { duration, .. } = self.ambient {
            if duration != self.duration {
                return bad(format!(
                    "ramp duration {duration} s differs from scenario duration {} s",
                    self.duration
                ));
            }
        }
        if let FeedforwardGain::Fixed(k) = self.feedforward_k {
            if !(k >= 0.0 && k.is_finite()) {
                return bad(format!("feedforward_K must be ≥ 0, got {k}"));
            }
        }
        Ok(())
    }
}
