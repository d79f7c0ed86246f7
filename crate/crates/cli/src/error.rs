use dynsal_core::Error;

/// Failure of a command, mapped to the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config keys or values. Exit 1.
    Usage(String),
    /// Missing or malformed inputs. Exit 2.
    Data(String),
    /// Divergence or undefined numeric results. Exit 3.
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m) => m.clone(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Spec(_) | Error::Geometry(_) => CliError::Usage(msg),
            Error::NonFinite(_) | Error::Undefined(_) => CliError::Numeric(msg),
            Error::Shape(_) | Error::Format { .. } | Error::Data(_) | Error::Io { .. } | Error::Image { .. } => {
                CliError::Data(msg)
            }
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
