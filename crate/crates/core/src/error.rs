use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// Variants split into two classes: malformed input (`Syntax`, `BadSpec`)
/// and domain failures (everything else). The CLI maps the first class to
/// exit code 2 and the second to exit code 3.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("malformed group spec `{spec}`: {message}")]
    BadSpec { spec: String, message: String },

    #[error("letter `{letter}` is outside the window of {group}")]
    OutsideWindow { letter: String, group: String },

    #[error("letter `{letter}` is not a generator of {group}")]
    UnknownLetter { letter: String, group: String },

    #[error("no image for letter `{0}` and no default configured")]
    UndefinedLetter(String),

    #[error("rewrite budget of {0} steps exhausted")]
    BudgetExceeded(u64),

    #[error("window boundary reached: {0}")]
    WindowBoundary(String),

    #[error("elements belong to different groups ({0} vs {1})")]
    OwnerMismatch(String, String),

    #[error("{0}")]
    Domain(String),

    #[error("internal verification failed: {0}")]
    Verification(String),
}

impl Error {
    pub fn syntax(offset: usize, message: impl Into<String>) -> Self {
        Error::Syntax {
            offset,
            message: message.into(),
        }
    }

    pub fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }

    /// True for malformed-input errors.
    pub fn is_parse(&self) -> bool {
        matches!(self, Error::Syntax { .. } | Error::BadSpec { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
