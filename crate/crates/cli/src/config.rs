//! Config loading. TOML by default; JSON when the file ends in `.json` or
//! starts with `{`. Every section rejects unknown keys, so a misspelt or
//! unit-less key such as `ej` (instead of `ej_ghz`) is a hard error naming
//! the key.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;

use crate::{CliError, Result};

/// A parsed config together with the raw bytes it came from.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub value: T,
    pub raw: Vec<u8>,
}

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<Loaded<T>> {
    let Some(path) = path else {
        return Ok(Loaded { value: T::default(), raw: Vec::new() });
    };
    let raw = fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&raw).map_err(|_| CliError::Config(format!("{}: not UTF-8", path.display())))?;
    let value = parse(text, path.extension().is_some_and(|e| e == "json"))
        .map_err(|msg| CliError::Config(format!("{}: {msg}", path.display())))?;
    Ok(Loaded { value, raw })
}

/// Parses config text; `json` forces JSON, otherwise the first character
/// decides.
pub fn parse<T: DeserializeOwned>(text: &str, json: bool) -> std::result::Result<T, String> {
    if json || text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| e.to_string())
    } else {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}

/// Fails unless `x` is finite and > 0.
pub fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {x}")))
    }
}

/// Fails unless `x` is finite and >= 0.
pub fn non_negative(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be non-negative, got {x}")))
    }
}

pub fn at_least(name: &str, n: usize, min: usize) -> Result<()> {
    if n >= min {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be at least {min}, got {n}")))
    }
}
