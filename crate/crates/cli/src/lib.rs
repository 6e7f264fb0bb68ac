//! Experiment runner: config loading, subcommand dispatch and artifact output.
//!
//! Every run validates its config, executes one study, and writes
//! `<subcommand>-<hash>.json` and `.csv` into the output directory. The JSON
//! embeds the effective config, so any artifact can be fed back in as the
//! config of a rerun.

pub mod artifact;
pub mod commands;
pub mod config;

use std::fmt;
use std::path::{Path, PathBuf};

use meanfield_core::Exec;

pub use artifact::{artifact_stem, config_hash, Artifact, Check, Table, WriteStatus};
pub use commands::{execute, Outcome, Subcommand};
pub use config::{ConfigError, ExperimentConfig};

/// Overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "MFNET_OUT_DIR";

#[derive(Debug)]
pub enum RunError {
    /// Bad config file, bad value, or a config/subcommand mismatch.
    Config(ConfigError),
    /// Failure inside a study, including divergence.
    Study(meanfield_core::Error),
    Io(std::io::Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "invalid config: {e}"),
            RunError::Study(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<meanfield_core::Error> for RunError {
    fn from(e: meanfield_core::Error) -> Self {
        match e {
            // Config errors raised by the core are still config errors.
            meanfield_core::Error::Config(msg) => RunError::Config(ConfigError { path: "config".into(), msg }),
            other => RunError::Study(other),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

/// Reads a TOML config, or an artifact JSON whose embedded config is reused.
///
/// For an artifact the embedded subcommand must match `sub`.
pub fn load_config(path: &Path, sub: Subcommand) -> Result<ExperimentConfig, RunError> {
    let text = std::fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        let art: Artifact = serde_json::from_str(&text)
            .map_err(|e| ConfigError { path: "artifact".into(), msg: format!("{}: {e}", path.display()) })?;
        if art.subcommand != sub.name() {
            return Err(ConfigError {
                path: "artifact.subcommand".into(),
                msg: format!("artifact is from `{}`, not `{}`", art.subcommand, sub.name()),
            }
            .into());
        }
        return Ok(art.config);
    }
    Ok(ExperimentConfig::from_toml(&text)?)
}

/// The output directory: the env override if set, else the config's.
pub fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| cfg.output.dir.clone())
}

/// The result of one run after its artifacts are on disk.
#[derive(Debug)]
pub struct RunSummary {
    pub artifact: Artifact,
    pub json: WriteStatus,
    pub csv: WriteStatus,
    pub headline: String,
}

impl RunSummary {
    pub fn passed(&self) -> bool {
        self.artifact.passed
    }

    /// Whether an earlier run with the same config produced different bytes.
    pub fn mismatched(&self) -> bool {
        matches!(self.json, WriteStatus::Mismatch { .. }) || matches!(self.csv, WriteStatus::Mismatch { .. })
    }

    pub fn line(&self) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let failed: Vec<&str> = self.artifact.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        let mut line = format!("{} {} {verdict} {}", self.artifact.subcommand, self.artifact.config_hash, self.headline);
        if !failed.is_empty() {
            line.push_str(&format!(" failed=[{}]", failed.join(",")));
        }
        match &self.json {
            WriteStatus::Created(p) => line.push_str(&format!(" -> {}", p.display())),
            WriteStatus::Reproduced(p) => line.push_str(&format!(" -> {} (reproduced)", p.display())),
            WriteStatus::Mismatch { existing, written } => {
                line.push_str(&format!(" -> {} (DIFFERS from {})", written.display(), existing.display()))
            }
        }
        line
    }
}

/// Builds the artifact for `sub` in memory.
pub fn build_artifact(sub: Subcommand, cfg: &ExperimentConfig, exec: Exec) -> Result<(Artifact, Table, String), RunError> {
    cfg.validate()?;
    let out = execute(sub, cfg, exec)?;
    let passed = out.checks.iter().all(|c| c.pass);
    let art = Artifact {
        subcommand: sub.name().into(),
        config_hash: config_hash(cfg),
        config: cfg.clone(),
        passed,
        checks: out.checks,
        report: out.report,
    };
    Ok((art, out.table, out.headline))
}

pub fn artifact_json(art: &Artifact) -> String {
    let mut s = serde_json::to_string_pretty(art).expect("artifact serializes to JSON");
    s.push('\n');
    s
}

/// Validates, runs and writes both artifacts into `dir`.
pub fn run_into(sub: Subcommand, cfg: &ExperimentConfig, exec: Exec, dir: &Path) -> Result<RunSummary, RunError> {
    let (artifact, table, headline) = build_artifact(sub, cfg, exec)?;
    let stem = artifact_stem(sub.name(), cfg);
    let json = artifact::write_append_only(dir, &stem, "json", artifact_json(&artifact).as_bytes())?;
    let csv = artifact::write_append_only(dir, &stem, "csv", table.to_csv().as_bytes())?;
    Ok(RunSummary { artifact, json, csv, headline })
}
