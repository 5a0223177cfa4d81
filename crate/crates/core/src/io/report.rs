//! Artifact writing: JSON envelopes, CSV tables, aligned text and the run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::hex_digest;
use crate::error::Result;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Formats a number with 17 significant digits; non-finite values as `NaN`,
/// `inf` or `-inf`.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Columns padded to their widest cell, numbers right-aligned.
pub fn text_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let cols = headers.len();
    let mut width: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (j, c) in r.iter().enumerate().take(cols) {
            width[j] = width[j].max(c.chars().count());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(j, c)| {
                if j > 0 && c.parse::<f64>().is_ok() {
                    format!("{c:>w$}", w = width[j])
                } else {
                    format!("{c:<w$}", w = width[j])
                }
            })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(headers.to_vec(), &mut out);
    let _ = writeln!(out, "{}", width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    for r in rows {
        line(r.iter().map(String::as_str).collect(), &mut out);
    }
    out
}

/// Short human rendering of a number.
pub fn fmt_short(x: f64) -> String {
    if !x.is_finite() {
        return fmt_num(x);
    }
    if x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e6) {
        format!("{x:.4e}")
    } else {
        format!("{x:.6}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub gatedvol: String,
    pub manifest_format: u32,
}

impl Default for Versions {
    fn default() -> Self {
        Self { gatedvol: env!("CARGO_PKG_VERSION").into(), manifest_format: 1 }
    }
}

/// Reproducibility record written by every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub models: Vec<String>,
    pub versions: Versions,
    pub artifacts: Vec<ArtifactEntry>,
    /// Set when some part of the command failed and its artifacts are missing.
    pub partial: bool,
    pub errors: Vec<String>,
}

/// JSON envelope tying a payload to the producing run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub config_hash: String,
    pub seed: u64,
    pub command: String,
    pub result: T,
}

/// Writes artifacts into the output directory and records their digests.
pub struct ArtifactWriter {
    dir: PathBuf,
    command: String,
    hash: String,
    seed: u64,
    entries: Vec<ArtifactEntry>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path, command: &str, hash: &str, seed: u64) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), command: command.into(), hash: hash.into(), seed, entries: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.entries.retain(|e| e.path != name);
        self.entries.push(ArtifactEntry { path: name.into(), sha256: hex_digest(bytes) });
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, payload: &T) -> Result<()> {
        let env = Envelope { config_hash: self.hash.clone(), seed: self.seed, command: self.command.clone(), result: payload };
        let mut s = serde_json::to_string_pretty(&env)?;
        s.push('\n');
        self.put(name, s.as_bytes())
    }

    /// CSV with a leading `# config_hash=…` comment line.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        self.csv_with_meta(name, &[], header, rows)
    }

    /// As [`csv`](Self::csv) with extra `# key=value` metadata lines.
    pub fn csv_with_meta(&mut self, name: &str, meta: &[(&str, String)], header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut s = format!("# config_hash={}\n# seed={}\n", self.hash, self.seed);
        for (k, v) in meta {
            s.push_str(&format!("# {k}={v}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(csv_err)?;
        for r in rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let body = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        s.push_str(&String::from_utf8_lossy(&body));
        self.put(name, s.as_bytes())
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let s = format!("config_hash: {}\nseed: {}\n\n{body}", self.hash, self.seed);
        self.put(name, s.as_bytes())
    }

    /// Writes `manifest.json` and returns it.
    pub fn finish(self, models: Vec<String>, errors: Vec<String>) -> Result<Manifest> {
        let m = Manifest {
            command: self.command,
            config_hash: self.hash,
            seed: self.seed,
            models,
            versions: Versions::default(),
            artifacts: self.entries,
            partial: !errors.is_empty(),
            errors,
        };
        let mut s = serde_json::to_string_pretty(&m)?;
        s.push('\n');
        std::fs::write(self.dir.join(MANIFEST_FILE), s)?;
        Ok(m)
    }
}

fn csv_err(e: csv::Error) -> crate::error::Error {
    std::io::Error::other(e.to_string()).into()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits_roundtrip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, f64::MIN_POSITIVE, 0.0] {
            let s = fmt_num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            assert_eq!(s.trim_start_matches('-').split('e').next().unwrap().replace('.', "").len(), 17);
        }
        assert_eq!(fmt_num(f64::NAN), "NaN");
    }

    #[test]
    fn table_columns_fit_longest_cell() {
        let t = text_table(&["model", "x"], &[vec!["a".into(), "1.5".into()], vec!["longer_name".into(), "-22.25".into()]]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[1], "-----------  ------");
        assert_eq!(lines[2], "a               1.5");
        assert_eq!(lines[3], "longer_name  -22.25");
    }
}
