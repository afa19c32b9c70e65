//! Argument checks that run before anything is sent to the server.

use crate::error::UsageError;

pub const LANGUAGES: [&str; 2] = ["uk", "ru"];

pub fn language(arg: &str, value: &str) -> Result<String, UsageError> {
    let v = value.trim().to_lowercase();
    if LANGUAGES.contains(&v.as_str()) {
        Ok(v)
    } else {
        Err(UsageError::new(
            arg,
            format!("unsupported language {value:?} (allowed: {})", LANGUAGES.join(", ")),
        ))
    }
}

fn hex_id(arg: &str, value: &str, len: usize, what: &str) -> Result<String, UsageError> {
    let ok = value.len() == len && value.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b));
    if ok {
        Ok(value.to_string())
    } else {
        Err(UsageError::new(
            arg,
            format!("{value:?} is not a {what} ({len} lowercase hex digits)"),
        ))
    }
}

/// Project ids are 32 hex digits.
pub fn project_id(arg: &str, value: &str) -> Result<String, UsageError> {
    hex_id(arg, value, 32, "project id")
}

/// Documents and corpora are addressed by a SHA-256 digest.
pub fn content_id(arg: &str, value: &str) -> Result<String, UsageError> {
    hex_id(arg, value, 64, "content id")
}

/// A lower bound on a score: finite and not negative.
pub fn threshold(arg: &str, value: f64) -> Result<f64, UsageError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(UsageError::new(arg, format!("{value} must be a finite number ≥ 0")))
    }
}

/// A probability-like bound in [0, 1].
pub fn fraction(arg: &str, value: f64) -> Result<f64, UsageError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(UsageError::new(arg, format!("{value} must lie in [0, 1]")))
    }
}

pub fn non_empty(arg: &str, value: &str) -> Result<String, UsageError> {
    let v = value.trim();
    if v.is_empty() {
        Err(UsageError::new(arg, "must not be empty"))
    } else {
        Ok(v.to_string())
    }
}
