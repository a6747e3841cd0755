//! Settings from a `key = value` file, overridden by `DRAWDASH_*` variables.
//!
//! ```text
//! # drawdash.conf
//! port = 7420
//! pause_gap_ms = 1200
//! model_url = http://localhost:8080/complete
//! ```

use std::path::PathBuf;

use thiserror::Error;

use crate::provider::RemoteConfig;
use crate::trigger::TriggerConfig;

pub const DEFAULT_PORT: u16 = 7420;
pub const ENV_PREFIX: &str = "DRAWDASH_";

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub trigger: TriggerConfig,
    pub port: u16,
    pub model_url: Option<String>,
    pub model_key: Option<String>,
    pub model_name: Option<String>,
    pub journal_dir: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            trigger: TriggerConfig::default(),
            port: DEFAULT_PORT,
            model_url: None,
            model_key: None,
            model_name: None,
            journal_dir: None,
            static_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected key = value")]
    Syntax { line: usize },
    #[error("unknown setting {0}")]
    UnknownKey(String),
    #[error("{key}: {reason}")]
    BadValue { key: String, reason: String },
}

pub const KEYS: &[&str] = &[
    "pause_gap_ms",
    "stability_ms",
    "min_interval_ms",
    "cooldown_after_reject_ms",
    "provider_timeout_ms",
    "context_span_ms",
    "port",
    "model_url",
    "model_key",
    "model_name",
    "journal_dir",
    "static_dir",
];

impl Config {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |reason: String| ConfigError::BadValue {
            key: key.to_owned(),
            reason,
        };
        let ms = |v: &str| v.parse::<i64>().map_err(|e| bad(e.to_string()));
        let t = &mut self.trigger;
        match key {
            "pause_gap_ms" => t.pause_gap_ms = ms(value)?,
            "stability_ms" => t.stability_ms = ms(value)?,
            "min_interval_ms" => t.min_interval_ms = ms(value)?,
            "cooldown_after_reject_ms" => t.cooldown_after_reject_ms = ms(value)?,
            "provider_timeout_ms" => t.provider_timeout_ms = ms(value)?,
            "context_span_ms" => t.context_span_ms = ms(value)?,
            "port" => self.port = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            "model_url" => self.model_url = Some(value.to_owned()),
            "model_key" => self.model_key = Some(value.to_owned()),
            "model_name" => self.model_name = Some(value.to_owned()),
            "journal_dir" => self.journal_dir = Some(value.into()),
            "static_dir" => self.static_dir = Some(value.into()),
            _ => return Err(ConfigError::UnknownKey(key.to_owned())),
        }
        self.trigger.validate().map_err(bad)
    }

    pub fn apply_file(&mut self, text: &str) -> Result<(), ConfigError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: n + 1 })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn apply_env<I>(&mut self, vars: I) -> Result<(), ConfigError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        for (name, value) in vars {
            let Some(key) = name.strip_prefix(ENV_PREFIX) else { continue };
            let key = key.to_ascii_lowercase();
            if KEYS.contains(&key.as_str()) {
                self.set(&key, &value)?;
            }
        }
        Ok(())
    }

    /// Defaults, then the optional file, then the process environment.
    pub fn load(file_text: Option<&str>) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        if let Some(text) = file_text {
            cfg.apply_file(text)?;
        }
        cfg.apply_env(std::env::vars())?;
        Ok(cfg)
    }

    pub fn remote(&self) -> Option<RemoteConfig> {
        Some(RemoteConfig {
            url: self.model_url.clone()?,
            key: self.model_key.clone(),
            model: self.model_name.clone(),
            timeout_ms: self.trigger.provider_timeout_ms as u64,
        })
    }
}
