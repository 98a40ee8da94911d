//! Flat `key = value` config files: one assignment per line, `#` comments,
//! explicit units (lambda dimensionless, gamma and theta in dB, seed decimal).

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("config error at '{key}': {message}")]
    Field { key: String, message: String },
}

impl ConfigError {
    pub fn field(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Field {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

/// Parsed but untyped configuration.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
    consumed: BTreeSet<String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: lineno,
                message: format!("expected 'key = value', got '{line}'"),
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(ConfigError::Syntax {
                    line: lineno,
                    message: "empty key".into(),
                });
            }
            if values.insert(key.clone(), value).is_some() {
                return Err(ConfigError::Syntax {
                    line: lineno,
                    message: format!("duplicate key '{key}'"),
                });
            }
        }
        Ok(Self {
            values,
            consumed: BTreeSet::new(),
        })
    }

    pub fn get_str(&mut self, key: &str) -> Option<String> {
        self.consumed.insert(key.to_string());
        self.values.get(key).cloned()
    }

    pub fn get_parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.get_str(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| ConfigError::field(key, format!("cannot parse '{v}': {e}"))),
        }
    }

    pub fn require_parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.get_parsed(key)?
            .ok_or_else(|| ConfigError::field(key, "missing required key"))
    }

    pub fn get_or<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get_parsed(key)?.unwrap_or(default))
    }

    /// Comma-separated list of floats.
    pub fn get_f64_list(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.get_str(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|e| ConfigError::field(key, format!("cannot parse '{t}': {e}")))
                })
                .collect::<Result<Vec<f64>, _>>()
                .map(Some),
        }
    }

    /// Error out on keys nothing consumed, to catch typos early.
    pub fn reject_unknown(&self) -> Result<(), ConfigError> {
        for key in self.values.keys() {
            if !self.consumed.contains(key) {
                return Err(ConfigError::field(key, "unknown key"));
            }
        }
        Ok(())
    }
}

/// dB to linear power ratio: x = 10^(x_dB/10).
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
