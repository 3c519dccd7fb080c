//! Number formatting, CSV tables and the run manifest.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use rdeid::numkernel::Real;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Settings;

pub const MANIFEST_NAME: &str = "manifest.toml";

/// Plain decimal, except scientific notation below `1e-4` (and from `1e16`
/// up, where plain digits stop being informative).
pub fn format_real<R: Real>(x: &R) -> String {
    if x.is_zero() {
        return "0".into();
    }
    let f = x.to_f64();
    if !f.is_finite() || f.abs() < 1e-4 || f.abs() >= 1e16 {
        if R::DIGITS <= 16 {
            return format!("{f:e}");
        }
        return trim_mantissa(&x.to_sci_string(17));
    }
    format!("{f}")
}

fn trim_mantissa(s: &str) -> String {
    match s.split_once('e') {
        Some((m, e)) if m.contains('.') => {
            let m = m.trim_end_matches('0').trim_end_matches('.');
            format!("{m}e{e}")
        }
        _ => s.to_string(),
    }
}

pub fn format_f64(x: f64) -> String {
    format_real(&x)
}

/// SHA-256 of `bytes` as lowercase hex.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Identifier shared by a manifest and the tables it produced. It depends
/// only on the resolved settings, so reruns give byte-identical tables.
pub fn run_id(settings: &Settings) -> Result<String> {
    let text = toml::to_string(settings).context("settings do not serialize")?;
    Ok(sha256_hex(text.as_bytes())[..16].to_string())
}

/// A tidy table written as CSV, preceded by one comment line naming the run.
pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &'static str, header: &[&'static str]) -> Self {
        Table {
            name,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path, run_id: &str) -> Result<PathBuf> {
        let path = dir.join(format!("{}.csv", self.name));
        let mut bytes = format!("# run {run_id}, see {MANIFEST_NAME}\n").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut bytes);
            w.write_record(&self.header)?;
            for row in &self.rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
        std::fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub run_id: String,
    pub subcommand: String,
    /// SHA-256 of the config file as read, or of the empty string without one.
    pub config_digest: String,
    pub config_path: Option<String>,
    pub seed: u64,
    pub precision: u32,
    pub outputs: Vec<String>,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub exit_code: i32,
    pub settings: Settings,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_NAME);
        let text = toml::to_string(self).context("manifest does not serialize")?;
        std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rdeid::numkernel::Mp32;

    #[test]
    fn formatting() {
        assert_eq!(format_f64(0.0), "0");
        assert_eq!(format_f64(0.5), "0.5");
        assert_eq!(format_f64(1e-4), "0.0001");
        assert_eq!(format_f64(9.5e-5), "9.5e-5");
        assert_eq!(format_f64(-3.25e-12), "-3.25e-12");
        assert_eq!(format_f64(123.0), "123");
        assert_eq!(
            format_real(&Mp32::parse_decimal("2.5e-40").unwrap()),
            "2.5e-40"
        );
        assert_eq!(format_real(&Mp32::parse_decimal("0.25").unwrap()), "0.25");
    }

    #[test]
    fn digest() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
