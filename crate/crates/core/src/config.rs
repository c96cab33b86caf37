//! Plain-text `key = value` configuration files.
//!
//! Lines are trimmed; `#` starts a comment; blank lines are ignored. Keys are
//! free-form dotted names (`coupling.l1`, `shoulder.inertia`). Every value
//! remembers its line so that semantic errors can point back into the file.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("missing required key `{key}`")]
    Missing { key: String },
    #[error("line {line}: invalid value for `{key}`: {reason}")]
    Invalid {
        line: usize,
        key: String,
        reason: String,
    },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, Entry>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    text: content.to_string(),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    text: content.to_string(),
                });
            }
            if entries.contains_key(key) {
                return Err(ConfigError::Duplicate {
                    line,
                    key: key.to_string(),
                });
            }
            entries.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line,
                },
            );
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Line number of `key`, if present.
    pub fn line_of(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    pub fn require<V: FromStr>(&self, key: &str) -> Result<V, ConfigError>
    where
        V::Err: std::fmt::Display,
    {
        match self.get(key)? {
            Some(v) => Ok(v),
            None => Err(ConfigError::Missing {
                key: key.to_string(),
            }),
        }
    }

    pub fn get<V: FromStr>(&self, key: &str) -> Result<Option<V>, ConfigError>
    where
        V::Err: std::fmt::Display,
    {
        let Some(entry) = self.entries.get(key) else {
            return Ok(None);
        };
        entry
            .value
            .parse::<V>()
            .map(Some)
            .map_err(|e| ConfigError::Invalid {
                line: entry.line,
                key: key.to_string(),
                reason: e.to_string(),
            })
    }

    pub fn get_or<V: FromStr>(&self, key: &str, default: V) -> Result<V, ConfigError>
    where
        V::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Parses a finite `f64`, checking it with `check` (which returns a reason on failure).
    pub fn real_checked(
        &self,
        key: &str,
        default: Option<f64>,
        check: impl Fn(f64) -> Result<(), String>,
    ) -> Result<f64, ConfigError> {
        let value = match (self.get::<f64>(key)?, default) {
            (Some(v), _) => v,
            (None, Some(d)) => return Ok(d),
            (None, None) => {
                return Err(ConfigError::Missing {
                    key: key.to_string(),
                })
            }
        };
        let line = self.line_of(key).unwrap_or(0);
        let invalid = |reason: String| ConfigError::Invalid {
            line,
            key: key.to_string(),
            reason,
        };
        if !value.is_finite() {
            return Err(invalid("value must be finite".into()));
        }
        check(value).map_err(invalid)?;
        Ok(value)
    }

    /// Builds the error for a semantically invalid `key`.
    pub fn invalid(&self, key: &str, reason: impl Into<String>) -> ConfigError {
        ConfigError::Invalid {
            line: self.line_of(key).unwrap_or(0),
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}

pub(crate) fn positive(v: f64) -> Result<(), String> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(format!("must be > 0, got {v}"))
    }
}

pub(crate) fn non_negative(v: f64) -> Result<(), String> {
    if v >= 0.0 {
        Ok(())
    } else {
        Err(format!("must be >= 0, got {v}"))
    }
}

pub(crate) fn any(_: f64) -> Result<(), String> {
    Ok(())
}
