use mutscore::bio_io::{IoError, ParseError};
use mutscore::evalbench::EvalError;
use mutscore::evo::EvoError;
use mutscore::logits::LogitsError;
use mutscore::native_lm::ModelError;
use mutscore::retrieval::RetrievalError;
use mutscore::scoring::ScoringError;
use mutscore::struct_tok::StructError;
use std::fmt;

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad or missing user input: exit 1.
    Input(String),
    /// A bug or an unexpected state: exit 2.
    Internal(String),
    /// Remote search failure: exit 3.
    Network(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        Self::Input(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) => 1,
            Self::Internal(_) => 2,
            Self::Network(_) => 3,
        }
    }

    /// Prefixes the message with some context.
    pub fn context(self, ctx: impl fmt::Display) -> Self {
        match self {
            Self::Input(m) => Self::Input(format!("{ctx}: {m}")),
            Self::Internal(m) => Self::Internal(format!("{ctx}: {m}")),
            Self::Network(m) => Self::Network(format!("{ctx}: {m}")),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, msg) = match self {
            Self::Input(m) => ("error", m),
            Self::Internal(m) => ("internal error", m),
            Self::Network(m) => ("network error", m),
        };
        // one line, whatever the underlying messages contain
        write!(f, "{kind}: {}", msg.replace('\n', " "))
    }
}

macro_rules! input_errors {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Input(e.to_string())
            }
        })*
    };
}

input_errors!(
    IoError,
    ParseError,
    EvoError,
    LogitsError,
    ScoringError,
    StructError,
    EvalError
);

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Diverged { .. } => CliError::Internal(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<RetrievalError> for CliError {
    fn from(e: RetrievalError) -> Self {
        match e {
            RetrievalError::Transport(_)
            | RetrievalError::Http { .. }
            | RetrievalError::MaxPolls { .. }
            | RetrievalError::MalformedJson(_) => CliError::Network(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
