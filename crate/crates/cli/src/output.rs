//! Result files and the atomically replaced output directory.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use fstchain::error::FstError;
use serde_json::{json, Value};

/// Errors of the driver, each mapped to an exit status.
#[derive(Debug)]
pub enum CliError {
    /// Malformed flags or configuration files.
    Config(String),
    Core(FstError),
}

impl From<FstError> for CliError {
    fn from(e: FstError) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Core(FstError::Json(_) | FstError::Io(_)) => 1,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) => 2,
        }
    }
}

pub fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

/// What a command produced.
#[derive(Debug, Default)]
pub struct Report {
    pub input: Value,
    pub result: Value,
    pub warnings: Vec<String>,
    /// `(file name, contents)` of the CSV tables.
    pub tables: Vec<(String, String)>,
    /// Set when a numerical check failed; artifacts are still written.
    pub failure: Option<String>,
}

impl Report {
    pub fn fail_if(&mut self, bad: bool, msg: impl FnOnce() -> String) {
        if bad && self.failure.is_none() {
            self.failure = Some(msg());
        }
    }

    pub fn exit_code(&self) -> u8 {
        if self.failure.is_some() {
            3
        } else {
            0
        }
    }

    /// `result.json` contents; deterministic for fixed inputs.
    pub fn result_json(&self, command: &str, seed: Option<u64>) -> Value {
        json!({
            "command": command,
            "version": fstchain::VERSION,
            "seed": seed,
            "input": self.input,
            "warnings": self.warnings,
            "status": if self.failure.is_some() { "tolerance_failure" } else { "ok" },
            "failure": self.failure,
            "result": self.result,
        })
    }
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s.into_bytes()
}

/// Stage all files in a sibling directory, then rename it into place so the
/// target never holds a partial set of outputs.
pub fn write_atomic(dir: &Path, files: &[(String, Vec<u8>)]) -> io::Result<()> {
    let parent = match dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = dir
        .file_name()
        .ok_or_else(|| {
            io::Error::new(
                io::ErrorKind::InvalidInput,
                "output path has no final component",
            )
        })?
        .to_string_lossy()
        .into_owned();
    fs::create_dir_all(&parent)?;
    let pid = std::process::id();
    let staging = parent.join(format!(".{name}.staging-{pid}"));
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    fs::create_dir(&staging)?;
    let staged = (|| {
        for (file, bytes) in files {
            fs::write(staging.join(file), bytes)?;
        }
        Ok::<_, io::Error>(())
    })();
    if let Err(e) = staged {
        let _ = fs::remove_dir_all(&staging);
        return Err(e);
    }
    if dir.exists() {
        let old = parent.join(format!(".{name}.old-{pid}"));
        fs::rename(dir, &old)?;
        if let Err(e) = fs::rename(&staging, dir) {
            let _ = fs::rename(&old, dir);
            return Err(e);
        }
        fs::remove_dir_all(old)?;
    } else {
        fs::rename(&staging, dir)?;
    }
    Ok(())
}

/// Write `result.json`, `timing.json` and the tables of `report` into `dir`.
pub fn emit(
    dir: &Path,
    command: &str,
    seed: Option<u64>,
    report: &Report,
    wall_time: f64,
) -> io::Result<()> {
    let mut files = vec![
        (
            "result.json".to_string(),
            pretty(&report.result_json(command, seed)),
        ),
        (
            "timing.json".to_string(),
            pretty(&json!({ "command": command, "wall_time_s": wall_time })),
        ),
    ];
    files.extend(
        report
            .tables
            .iter()
            .map(|(n, c)| (n.clone(), c.clone().into_bytes())),
    );
    write_atomic(dir, &files)
}
