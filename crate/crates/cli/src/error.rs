use std::fmt;

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed arguments or configuration.
    Usage(String),
    /// A solver ran but failed to produce an answer.
    Solver(String),
    /// Reading or writing a file failed.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(path: &std::path::Path, err: impl fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<spinsynth::Error> for CliError {
    fn from(e: spinsynth::Error) -> Self {
        use spinsynth::Error as E;
        match e {
            E::Domain(_) | E::EqualFields(_) | E::NormViolation { .. } => CliError::Usage(e.to_string()),
            E::StepUnderflow { .. } | E::TooManySteps { .. } | E::BlowUp { .. } | E::NoConvergence { .. } => {
                CliError::Solver(e.to_string())
            }
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
