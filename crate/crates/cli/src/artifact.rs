//! Append-only JSON/CSV artifacts named after the config they came from.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

/// One acceptance check: the measured value, the band it must lie in, and the verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub pass: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, value: f64, lo: Option<f64>, hi: Option<f64>) -> Self {
        let pass = value.is_finite() && lo.is_none_or(|l| value >= l) && hi.is_none_or(|h| value <= h);
        Check { name: name.into(), value, lo, hi, pass }
    }

    pub fn at_most(name: impl Into<String>, value: f64, hi: f64) -> Self {
        Self::within(name, value, None, Some(hi))
    }

    pub fn at_least(name: impl Into<String>, value: f64, lo: f64) -> Self {
        Self::within(name, value, Some(lo), None)
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Check { name: name.into(), value: if ok { 1.0 } else { 0.0 }, lo: Some(1.0), hi: None, pass: ok }
    }
}

/// Everything written to `<subcommand>-<hash>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub subcommand: String,
    pub config_hash: String,
    /// The effective config after defaults; rerunning from it reproduces the artifact.
    pub config: ExperimentConfig,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub report: serde_json::Value,
}

/// First 16 hex digits of SHA-256 over the config's JSON encoding. Field order
/// is fixed by the struct layout, so equal configs hash equally.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes to JSON");
    hex::encode(&Sha256::digest(&bytes)[..8])
}

pub fn artifact_stem(subcommand: &str, cfg: &ExperimentConfig) -> String {
    format!("{subcommand}-{}", config_hash(cfg))
}

/// What happened to one artifact file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WriteStatus {
    Created(PathBuf),
    /// A byte-identical file was already there and was left alone.
    Reproduced(PathBuf),
    /// The existing file differs; the new bytes went to a sibling file.
    Mismatch { existing: PathBuf, written: PathBuf },
}

impl WriteStatus {
    pub fn path(&self) -> &Path {
        match self {
            WriteStatus::Created(p) | WriteStatus::Reproduced(p) => p,
            WriteStatus::Mismatch { written, .. } => written,
        }
    }
}

/// Writes `bytes` to `dir/name` without ever replacing an existing file.
pub fn write_append_only(dir: &Path, stem: &str, ext: &str, bytes: &[u8]) -> std::io::Result<WriteStatus> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{stem}.{ext}"));
    match create_new(&path, bytes) {
        Ok(()) => return Ok(WriteStatus::Created(path)),
        Err(e) if e.kind() != std::io::ErrorKind::AlreadyExists => return Err(e),
        Err(_) => {}
    }
    if fs::read(&path)? == bytes {
        return Ok(WriteStatus::Reproduced(path));
    }
    for n in 1.. {
        let alt = dir.join(format!("{stem}.rerun-{n}.{ext}"));
        match create_new(&alt, bytes) {
            Ok(()) => return Ok(WriteStatus::Mismatch { existing: path, written: alt }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e),
        }
    }
    unreachable!()
}

fn create_new(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut f = OpenOptions::new().write(true).create_new(true).open(path)?;
    f.write_all(bytes)?;
    f.sync_all()
}

/// Flat CSV with a header row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_tracks_config_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 16);
        b.seed = 1;
        assert_ne!(config_hash(&a), config_hash(&b));
        let mut c = a.clone();
        c.output.dir = "other".into();
        assert_eq!(config_hash(&a), config_hash(&c));
    }

    #[test]
    fn writes_never_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let s1 = write_append_only(dir.path(), "x-1", "json", b"abc").unwrap();
        assert!(matches!(s1, WriteStatus::Created(_)));
        let s2 = write_append_only(dir.path(), "x-1", "json", b"abc").unwrap();
        assert!(matches!(s2, WriteStatus::Reproduced(_)));
        let s3 = write_append_only(dir.path(), "x-1", "json", b"abd").unwrap();
        let WriteStatus::Mismatch { existing, written } = s3 else { panic!() };
        assert_eq!(fs::read(existing).unwrap(), b"abc");
        assert_eq!(fs::read(&written).unwrap(), b"abd");
        assert!(written.ends_with("x-1.rerun-1.json"));
        let s4 = write_append_only(dir.path(), "x-1", "json", b"abe").unwrap();
        assert!(s4.path().ends_with("x-1.rerun-2.json"));
    }

    #[test]
    fn checks_respect_bands() {
        assert!(Check::within("s", -0.5, Some(-0.65), Some(-0.35)).pass);
        assert!(!Check::within("s", -0.7, Some(-0.65), Some(-0.35)).pass);
        assert!(!Check::at_most("e", f64::NAN, 1.0).pass);
        assert!(Check::flag("ok", true).pass);
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "2".into()]);
        assert_eq!(t.to_csv(), "a,b\n1,2\n");
    }
}
