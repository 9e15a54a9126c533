use std::fmt;

use eqws_core::{EqwsError, ErrorClass};

/// A failure tagged with the pipeline stage it came from.
#[derive(Debug)]
pub struct CliError {
    pub stage: String,
    pub class: ErrorClass,
    pub message: String,
    pub config_hash: Option<String>,
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn config(stage: &str, message: impl Into<String>) -> Self {
        CliError {
            stage: stage.into(),
            class: ErrorClass::Config,
            message: message.into(),
            config_hash: None,
        }
    }

    pub fn data(stage: &str, message: impl Into<String>) -> Self {
        CliError {
            class: ErrorClass::Data,
            ..CliError::config(stage, message)
        }
    }

    pub fn from_core(stage: &str, err: EqwsError) -> Self {
        CliError {
            stage: stage.into(),
            class: err.class(),
            message: err.to_string(),
            config_hash: None,
        }
    }

    pub fn with_hash(mut self, hash: &str) -> Self {
        self.config_hash = Some(hash.into());
        self
    }

    pub fn exit_code(&self) -> i32 {
        match self.class {
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Numerical => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} failed: {}", self.stage, self.message)?;
        if let Some(h) = &self.config_hash {
            write!(f, " (config {h})")?;
        }
        Ok(())
    }
}

impl std::error::Error for CliError {}

/// Attaches a stage name to core results.
pub trait Stage<T> {
    fn stage(self, stage: &str) -> CliResult<T>;
}

impl<T> Stage<T> for eqws_core::Result<T> {
    fn stage(self, stage: &str) -> CliResult<T> {
        self.map_err(|e| CliError::from_core(stage, e))
    }
}

impl<T> Stage<T> for std::io::Result<T> {
    fn stage(self, stage: &str) -> CliResult<T> {
        self.map_err(|e| CliError::data(stage, e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_class() {
        let e: CliResult<()> = Err(EqwsError::InvalidParams("x".into())).stage("filterbank");
        assert_eq!(e.unwrap_err().exit_code(), 2);
        let e: CliResult<()> = Err(EqwsError::DegenerateImage).stage("scatter");
        assert_eq!(e.unwrap_err().exit_code(), 3);
        let e: CliResult<()> = Err(EqwsError::Singular("lda".into())).stage("learn");
        let e = e.unwrap_err().with_hash("abc");
        assert_eq!(e.exit_code(), 4);
        assert_eq!(e.to_string(), "learn failed: singular system: lda (config abc)");
    }
}
