//! Line-based "key = value" scenario configs: "#" comments, no nesting,
//! strict keys (unknown or duplicate keys are errors, with line numbers).

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError {
            line: Some(line),
            message: message.into(),
        }
    }

    pub fn general(message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Parse the raw text into (key, value, line) entries; duplicates rejected.
pub fn parse_entries(text: &str) -> Result<Vec<(String, String, usize)>, ConfigError> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = raw.split('#').next().unwrap_or("");
        if stripped.trim().is_empty() {
            continue;
        }
        let Some((k, v)) = stripped.split_once('=') else {
            return Err(ConfigError::at(line, format!("expected `key = value`, got `{}`", stripped.trim())));
        };
        let key = k.trim().to_string();
        let value = v.trim().to_string();
        if key.is_empty() {
            return Err(ConfigError::at(line, "empty key"));
        }
        if let Some(first) = seen.get(&key) {
            return Err(ConfigError::at(
                line,
                format!("duplicate key `{key}` (first set on line {first})"),
            ));
        }
        seen.insert(key.clone(), line);
        out.push((key, value, line));
    }
    Ok(out)
}

/// Schema entry for one scenario key.
#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub name: &'static str,
    pub required: bool,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

impl KeySpec {
    pub const fn required(name: &'static str, help: &'static str) -> Self {
        KeySpec {
            name,
            required: true,
            default: None,
            help,
        }
    }

    pub const fn optional(name: &'static str, default: &'static str, help: &'static str) -> Self {
        KeySpec {
            name,
            required: false,
            default: Some(default),
            help,
        }
    }
}

/// Validated parameter table for one scenario kind.
#[derive(Debug, Clone)]
pub struct Params {
    values: BTreeMap<String, (String, Option<usize>)>,
}

impl Params {
    /// Check entries against the schema: unknown keys rejected, required keys
    /// present, defaults filled in.
    pub fn build(
        entries: &[(String, String, usize)],
        schema: &[KeySpec],
    ) -> Result<Params, ConfigError> {
        let mut values: BTreeMap<String, (String, Option<usize>)> = BTreeMap::new();
        for (k, v, line) in entries {
            if !schema.iter().any(|s| s.name == k) {
                return Err(ConfigError::at(*line, format!("unknown key `{k}`")));
            }
            values.insert(k.clone(), (v.clone(), Some(*line)));
        }
        for spec in schema {
            if values.contains_key(spec.name) {
                continue;
            }
            if spec.required {
                return Err(ConfigError::general(format!(
                    "missing required key `{}`",
                    spec.name
                )));
            }
            if let Some(d) = spec.default {
                values.insert(spec.name.to_string(), (d.to_string(), None));
            }
        }
        Ok(Params { values })
    }

    fn raw(&self, key: &str) -> Result<(&str, Option<usize>), ConfigError> {
        self.values
            .get(key)
            .map(|(v, l)| (v.as_str(), *l))
            .ok_or_else(|| ConfigError::general(format!("key `{key}` not set")))
    }

    pub fn get_str(&self, key: &str) -> Result<String, ConfigError> {
        Ok(self.raw(key)?.0.to_string())
    }

    pub fn get_f64(&self, key: &str) -> Result<f64, ConfigError> {
        let (v, line) = self.raw(key)?;
        v.parse::<f64>().map_err(|_| ConfigError {
            line,
            message: format!("key `{key}`: expected a number, got `{v}`"),
        })
    }

    pub fn get_usize(&self, key: &str) -> Result<usize, ConfigError> {
        let (v, line) = self.raw(key)?;
        v.parse::<usize>().map_err(|_| ConfigError {
            line,
            message: format!("key `{key}`: expected a nonnegative integer, got `{v}`"),
        })
    }

    pub fn get_bool(&self, key: &str) -> Result<bool, ConfigError> {
        let (v, line) = self.raw(key)?;
        match v {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(ConfigError {
                line,
                message: format!("key `{key}`: expected true/false, got `{v}`"),
            }),
        }
    }

    /// Comma-separated list of numbers.
    pub fn get_f64_list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        let (v, line) = self.raw(key)?;
        v.split(',')
            .map(|piece| {
                piece.trim().parse::<f64>().map_err(|_| ConfigError {
                    line,
                    message: format!("key `{key}`: `{piece}` is not a number"),
                })
            })
            .collect()
    }

    /// Resolved (key, value) pairs, for the summary mirror.
    pub fn resolved(&self) -> Vec<(String, String)> {
        self.values
            .iter()
            .map(|(k, (v, _))| (k.clone(), v.clone()))
            .collect()
    }
}
