use std::fmt;

use serde_json::json;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, missing or malformed input.
    Validation(String),
    /// A malformed CSV cell. `row` counts data rows from 1, header excluded.
    Parse {
        row: usize,
        column: String,
        message: String,
    },
    /// The computation itself failed (empty neighborhoods, divergence, ...).
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Parse { .. } => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    /// Single-line JSON for stderr.
    pub fn to_json(&self) -> String {
        let v = match self {
            CliError::Validation(m) => json!({"error": "validation", "message": m}),
            CliError::Parse { row, column, message } => {
                json!({"error": "validation", "kind": "parse", "row": row, "column": column, "message": message})
            }
            CliError::Numeric(m) => json!({"error": "numeric", "message": m}),
            CliError::Io(m) => json!({"error": "io", "message": m}),
        };
        v.to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Numeric(m) | CliError::Io(m) => f.write_str(m),
            CliError::Parse { row, column, message } => write!(f, "row {row}, column {column}: {message}"),
        }
    }
}

impl From<locuskit::Error> for CliError {
    fn from(e: locuskit::Error) -> Self {
        use locuskit::Error as E;
        match e {
            E::EmptyNeighborhood { .. }
            | E::SingularSystem
            | E::ZeroDenominator
            | E::RankDeficient { .. }
            | E::EigenFailure
            | E::NonFiniteLoss { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
