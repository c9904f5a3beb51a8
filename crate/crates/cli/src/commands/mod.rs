//! Subcommand implementations. Each writes its artifacts into an output
//! directory and returns a summary; exit codes are decided by the caller.

mod exclusion;
mod profile;
mod simulate;
mod transform;
mod verify;

pub use exclusion::{exclusion, ExclusionArgs};
pub use profile::{profile, ProfileSummary};
pub use simulate::{simulate, SimulateSummary};
pub use transform::{transform, TransformSummary};
pub use verify::{verify, VerifySummary};

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

pub const LOG_FILE: &str = "log.csv";
pub const SNAPSHOT_DIR: &str = "snapshots";

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| CliError::io(path, e))
}

pub(crate) fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// `*.bulb` files of a directory in name order.
pub(crate) fn list_snapshots(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let rd = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut v: Vec<PathBuf> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "bulb"))
        .collect();
    v.sort();
    Ok(v)
}

pub(crate) fn read_log(dir: &Path) -> Result<bulb_core::diagnostics::TrajectoryLog, CliError> {
    let p = dir.join(LOG_FILE);
    let text = std::fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?;
    bulb_core::diagnostics::TrajectoryLog::from_csv(&text).map_err(|e| CliError::Io {
        path: p.display().to_string(),
        message: e.to_string(),
    })
}

/// Removes this command's own earlier `<prefix>*.bulb` outputs from `dir` so
/// a re-run never leaves snapshots of another manifest behind.
pub(crate) fn clear_stale(dir: &Path, prefix: &str) -> Result<(), CliError> {
    for p in list_snapshots(dir)? {
        if p.file_name().is_some_and(|f| f.to_string_lossy().starts_with(prefix)) {
            log::info!("removing stale {}", p.display());
            std::fs::remove_file(&p).map_err(|e| CliError::io(&p, e))?;
        }
    }
    Ok(())
}

/// Canonical TOML echo of a config fragment.
pub(crate) fn echo<T: Serialize>(value: &T) -> String {
    toml::to_string(value).unwrap_or_else(|e| format!("# unserializable: {e}"))
}
