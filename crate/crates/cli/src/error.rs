use std::fmt;
use std::path::PathBuf;

/// Process exit codes: 0 ok, 1 unexpected I/O, 2 configuration error,
/// 3 ingestion error, 4 numeric failure.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration file, schema violation or inconsistent parameters.
    Config(String),
    /// A series file could not be ingested; carries the file and, where
    /// known, the offending 1-based line.
    Ingestion {
        path: PathBuf,
        line: Option<usize>,
        message: String,
    },
    /// A numeric computation failed or the data were degenerate.
    Numeric(String),
    /// Filesystem trouble reading or writing artifacts.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Ingestion { .. } => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Ingestion {
                path,
                line: Some(l),
                message,
            } => {
                write!(f, "ingestion error: {}:{l}: {message}", path.display())
            }
            CliError::Ingestion {
                path,
                line: None,
                message,
            } => {
                write!(f, "ingestion error: {}: {message}", path.display())
            }
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

// Library errors surfacing mid-run: invalid inputs trace back to the
// configuration; everything else is a numeric/data failure.
impl From<specdet::Error> for CliError {
    fn from(e: specdet::Error) -> Self {
        match e {
            specdet::Error::InvalidInput(m) => CliError::Config(m),
            specdet::Error::DegenerateInput(m)
            | specdet::Error::DegenerateTraining(m)
            | specdet::Error::Numeric(m) => CliError::Numeric(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
