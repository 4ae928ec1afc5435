use thiserror::Error;

/// Source location inside a DSL document (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("fit did not converge after {iterations} iterations: {reason}")]
    FitDiverged {
        iterations: usize,
        reason: String,
        /// Sum of squared residuals after each accepted step.
        trace: Vec<f64>,
    },

    #[error("{loc}: unknown keyword `{keyword}`")]
    UnknownKeyword { loc: Location, keyword: String },

    #[error("{loc}: duplicate name `{name}`")]
    DuplicateName { loc: Location, name: String },

    #[error("{loc}: undefined reference `{name}`")]
    UndefinedReference { loc: Location, name: String },

    #[error("{loc}: malformed number `{text}`: {reason}")]
    MalformedNumber {
        loc: Location,
        text: String,
        reason: String,
    },

    #[error("{loc}: syntax error: {message}")]
    Syntax { loc: Location, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable machine-readable identifier of the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidState(_) => "E_INVALID_STATE",
            Error::InvalidInput(_) => "E_INVALID_INPUT",
            Error::Config(_) => "E_CONFIG",
            Error::FitDiverged { .. } => "E_FIT_DIVERGED",
            Error::UnknownKeyword { .. } => "E_DSL_UNKNOWN_KEYWORD",
            Error::DuplicateName { .. } => "E_DSL_DUPLICATE_NAME",
            Error::UndefinedReference { .. } => "E_DSL_UNDEFINED_REFERENCE",
            Error::MalformedNumber { .. } => "E_DSL_MALFORMED_NUMBER",
            Error::Syntax { .. } => "E_DSL_SYNTAX",
            Error::Io { .. } => "E_IO",
        }
    }

    /// Location in the source text, for parse errors.
    pub fn location(&self) -> Option<Location> {
        match self {
            Error::UnknownKeyword { loc, .. }
            | Error::DuplicateName { loc, .. }
            | Error::UndefinedReference { loc, .. }
            | Error::MalformedNumber { loc, .. }
            | Error::Syntax { loc, .. } => Some(*loc),
            _ => None,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            Error::FitDiverged { .. } | Error::InvalidState(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
