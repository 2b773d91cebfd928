//! Error type shared across the crate, with process exit codes for the CLI.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: bad flags, malformed config files, bad model specs.
    #[error("config error: {0}")]
    Config(String),

    /// Invalid or inconsistent data: malformed CSV, dimension mismatches,
    /// degenerate class structure.
    #[error("data error: {0}")]
    Data(String),

    /// Training produced a non-finite loss or another numeric breakdown.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// A pipeline stage failed; carries the stage name and the underlying cause.
    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wrap an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }

    /// Process exit code: 2 config, 3 data/io, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data(_) | Error::Io(_) => 3,
            Error::Numeric(_) => 4,
            Error::Stage { source, .. } => source.exit_code(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(Error::Config("x".into()).exit_code(), 2);
        assert_eq!(Error::Data("x".into()).exit_code(), 3);
        assert_eq!(Error::Numeric("x".into()).exit_code(), 4);
        let wrapped = Error::Numeric("diverged".into()).in_stage("fit");
        assert_eq!(wrapped.exit_code(), 4);
        assert!(wrapped.to_string().contains("fit"));
        assert!(format!("{wrapped}").contains("diverged") || format!("{:?}", wrapped).contains("diverged"));
    }
}
