use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use ceg_core::CegError;

/// Everything a command needs to run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model_path: Option<PathBuf>,
    pub intervention_path: Option<PathBuf>,
    pub query_path: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    /// Seed for redrawing fixture probabilities.
    pub seed: Option<u64>,
    pub tolerance: f64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(CliError::Validation(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        for p in [&self.model_path, &self.intervention_path, &self.query_path]
            .into_iter()
            .flatten()
        {
            if !p.is_file() {
                return Err(CliError::Validation(format!("cannot read {}", p.display())));
            }
        }
        Ok(())
    }

    pub fn model(&self) -> Result<&Path, CliError> {
        self.model_path
            .as_deref()
            .ok_or_else(|| CliError::Validation("--model is required".into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Parse(String),
    Validation(String),
    /// The query ran but the effect could not be identified or the
    /// formulas disagreed. The report is still printed.
    Identification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Identification(_) => 3,
            CliError::Parse(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) | CliError::Validation(m) => f.write_str(m),
            CliError::Identification(m) => write!(f, "identification failure: {m}"),
        }
    }
}

impl From<CegError> for CliError {
    fn from(e: CegError) -> Self {
        if e.is_parse() {
            CliError::Parse(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))
}

pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))
}
