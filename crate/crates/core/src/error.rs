use thiserror::Error;

/// Library-wide error type. `Syntax` maps to process exit code 2 in the CLI,
/// everything else to exit code 1.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar argument is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed profile text or JSON input.
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    /// Well-formed input that violates a structural invariant.
    #[error("semantic error: {0}")]
    Semantic(String),

    /// A named ensemble constraint cannot be met.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A bracketing interval for a root/threshold search does not exist.
    #[error("search domain error: {0}")]
    NoBracket(String),

    /// A caller-supplied value breaks an operation's precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
