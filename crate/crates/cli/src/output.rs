//! CSV/JSON emission with 12 significant digits, and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::{CliError, Result, RunConfig};

pub const SIGNIFICANT_DIGITS: usize = 12;

/// `x` with 12 significant digits, fixed notation for exponents in
/// `[-5, 12)` and scientific notation otherwise. Trailing zeros are dropped.
pub fn num(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let rounded: f64 = sci.parse().expect("round trip");
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{rounded:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Rounds `x` to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().expect("round trip")
}

/// Rounds every float inside a JSON value in place.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round_sig).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Value> {
    let mut v = serde_json::to_value(value).map_err(|e| CliError::Numeric(format!("cannot serialize: {e}")))?;
    round_json(&mut v);
    Ok(v)
}

pub fn pretty_json(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values always serialize")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Output files collected in memory and written once the run succeeds.
#[derive(Debug, Default, Clone)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn files(&self) -> impl Iterator<Item = (&str, &[u8])> {
        self.files.iter().map(|(n, b)| (n.as_str(), b.as_slice()))
    }

    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    /// Header row plus one record per row.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::Output(format!("{name}: {e}"));
        w.write_record(header).map_err(fail)?;
        for row in rows {
            w.write_record(&row).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Output(format!("{name}: {e}")))?;
        self.add(name, bytes);
        Ok(())
    }

    /// Numeric table, every cell formatted by [`num`].
    pub fn numeric_csv(&mut self, name: &str, header: &[&str], columns: &[&[f64]]) -> Result<()> {
        let n = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != n) {
            return Err(CliError::Numeric(format!("{name}: ragged columns")));
        }
        let rows = (0..n).map(|i| columns.iter().map(|c| num(c[i])).collect());
        self.csv(name, header, rows)
    }

    pub fn json(&mut self, name: &str, v: &Value) {
        let mut text = pretty_json(v);
        text.push('\n');
        self.add(name, text.into_bytes());
    }

    /// Writes every file and `manifest.json` into `dir`.
    pub fn write_all(&self, dir: &Path, rc: &RunConfig, raw_config: &[u8], effective: &Value) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
        let mut written = Vec::new();
        let mut listed = Vec::new();
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
            listed.push(json!({ "file": name, "sha256": sha256_hex(bytes) }));
            written.push(path);
        }
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let manifest = json!({
            "subcommand": rc.command.name(),
            "config_path": rc.config.as_ref().map(|p| p.display().to_string()),
            "inputs_sha256": sha256_hex(raw_config),
            "effective_config": effective,
            "seed": rc.seed,
            "threads": rc.threads,
            "versions": {
                "scq-cli": env!("CARGO_PKG_VERSION"),
                "scq-core": scq_core::VERSION,
                "scq-qec": scq_qec::VERSION,
            },
            "outputs": listed,
            "timestamp_unix": timestamp,
        });
        let path = dir.join("manifest.json");
        let mut text = pretty_json(&manifest);
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        written.push(path);
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(7.6), "7.6");
        assert_eq!(num(1.0 / 3.0), "0.333333333333");
        assert_eq!(num(-2.0 / 3.0 * 1e-9), "-6.66666666667e-10");
        assert_eq!(num(123456789012345.0), "1.23456789012e14");
        assert_eq!(num(0.0), "0");
        assert_eq!(num(100.0), "100");
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
    }
}
