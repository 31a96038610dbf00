//! Key/value config files (TOML). Every long flag has a config key of the
//! same name with dashes as underscores; command-line flags win.

use std::path::Path;

use crate::CliError;

#[derive(Debug, Default)]
pub struct FileConfig {
    table: toml::Table,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let body = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let table: toml::Table = body
            .parse()
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(Self { table })
    }

    fn get(&self, key: &str) -> Option<&toml::Value> {
        self.table.get(key)
    }

    pub fn string(&self, key: &str) -> Result<Option<String>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(other) => Ok(Some(other.to_string())),
        }
    }

    pub fn boolean(&self, key: &str) -> Result<Option<bool>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Boolean(b)) => Ok(Some(*b)),
            Some(other) => Err(bad(key, "a boolean", other)),
        }
    }

    pub fn unsigned(&self, key: &str) -> Result<Option<u64>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(other) => Err(bad(key, "a nonnegative integer", other)),
        }
    }

    pub fn float(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(x)) => Ok(Some(*x)),
            Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(other) => Err(bad(key, "a number", other)),
        }
    }

    /// Numeric list: a TOML array of numbers or a "1,2,3" string.
    pub fn float_list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    match item {
                        toml::Value::Float(x) => out.push(*x),
                        toml::Value::Integer(i) => out.push(*i as f64),
                        other => return Err(bad(key, "numbers", other)),
                    }
                }
                Ok(Some(out))
            }
            Some(toml::Value::String(s)) => parse_list(key, s),
            Some(toml::Value::Float(x)) => Ok(Some(vec![*x])),
            Some(toml::Value::Integer(i)) => Ok(Some(vec![*i as f64])),
            Some(other) => Err(bad(key, "a list of numbers", other)),
        }
    }

    pub fn unsigned_list(&self, key: &str) -> Result<Option<Vec<usize>>, CliError> {
        let Some(floats) = self.float_list(key)? else {
            return Ok(None);
        };
        floats
            .into_iter()
            .map(|x| {
                if x >= 0.0 && x.fract() == 0.0 {
                    Ok(x as usize)
                } else {
                    Err(CliError::Config(format!(
                        "config key {key}: {x} is not a nonnegative integer"
                    )))
                }
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    /// String list: a TOML array of strings or a comma-separated string.
    pub fn string_list(&self, key: &str) -> Result<Option<Vec<String>>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    match item {
                        toml::Value::String(s) => out.push(s.clone()),
                        other => out.push(other.to_string()),
                    }
                }
                Ok(Some(out))
            }
            Some(toml::Value::String(s)) => {
                Ok(Some(s.split(',').map(|p| p.trim().to_string()).collect()))
            }
            Some(other) => Ok(Some(vec![other.to_string()])),
        }
    }
}

fn parse_list(key: &str, s: &str) -> Result<Option<Vec<f64>>, CliError> {
    s.split(',')
        .map(|part| {
            part.trim().parse::<f64>().map_err(|_| {
                CliError::Config(format!("config key {key}: cannot parse {part:?} as a number"))
            })
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

fn bad(key: &str, wanted: &str, got: &toml::Value) -> CliError {
    CliError::Config(format!("config key {key}: expected {wanted}, got {got}"))
}
