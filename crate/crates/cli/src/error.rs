use thiserror::Error;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SERVER: i32 = 2;
pub const EXIT_INTEGRITY: i32 = 3;

/// Server error codes that mean stored data or the ontology failed an
/// integrity check, as opposed to an ordinary request failure.
const INTEGRITY_CODES: [&str; 6] = [
    "DIGEST_MISMATCH",
    "MALFORMED_INDEX",
    "STALE_INDEX",
    "SCHEMA_VIOLATION",
    "INCONSISTENT_INPUT",
    "VERIFICATION_BLOCKED",
];

/// A rejected command-line argument, reported before any network call.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("USAGE_ERROR: {arg}: {reason}")]
pub struct UsageError {
    pub arg: String,
    pub reason: String,
}

impl UsageError {
    pub fn new(arg: impl Into<String>, reason: impl Into<String>) -> Self {
        UsageError {
            arg: arg.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Usage(#[from] UsageError),
    #[error("UNKNOWN_FIELD: {field} (available: {})", available.join(", "))]
    UnknownField { field: String, available: Vec<String> },
    #[error("configuration: {0}")]
    Config(String),
    #[error("{code}: {message}")]
    Api { status: u16, code: String, message: String },
    #[error("cannot reach {url}: {reason}")]
    Transport { url: String, reason: String },
    #[error("not logged in to {0}; run `icon login`")]
    NotLoggedIn(String),
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::UnknownField { .. } | CliError::Config(_) => EXIT_USAGE,
            CliError::Api { code, .. } if INTEGRITY_CODES.contains(&code.as_str()) => EXIT_INTEGRITY,
            _ => EXIT_SERVER,
        }
    }

    pub fn io(path: impl std::fmt::Display, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.to_string(),
            reason: e.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    fn api(code: &str) -> CliError {
        CliError::Api {
            status: 409,
            code: code.into(),
            message: String::new(),
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(UsageError::new("x", "y")).exit_code(), EXIT_USAGE);
        assert_eq!(api("INVALID_STATE").exit_code(), EXIT_SERVER);
        assert_eq!(api("DIGEST_MISMATCH").exit_code(), EXIT_INTEGRITY);
        assert_eq!(api("VERIFICATION_BLOCKED").exit_code(), EXIT_INTEGRITY);
        assert_eq!(CliError::NotLoggedIn("s".into()).exit_code(), EXIT_SERVER);
    }
}
