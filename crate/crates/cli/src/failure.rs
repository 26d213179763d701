use std::path::Path;

use radar_mrf::Error;

pub const INTERNAL: u8 = 1;
pub const INPUT: u8 = 2;
pub const CONFIG: u8 = 3;

/// A diagnostic plus the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: CONFIG,
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: INPUT,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            code: INTERNAL,
            message: message.into(),
        }
    }

    /// Prefix the message with the file it concerns.
    pub fn at(mut self, path: &Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }
}

pub fn code_of(e: &Error) -> u8 {
    match e {
        Error::Config(_) => CONFIG,
        Error::Io { .. }
        | Error::SizeMismatch { .. }
        | Error::NonFinite { .. }
        | Error::Schema(_)
        | Error::UnknownField(_)
        | Error::OutsideRoi { .. }
        | Error::NonPositiveDimension(_)
        | Error::ProbabilityOutOfRange { .. }
        | Error::Parse { .. }
        | Error::Json(_) => INPUT,
        _ => INTERNAL,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: code_of(&e),
            message: e.to_string(),
        }
    }
}

/// Combine per-file failures into one, keeping the most severe code
/// (configuration over input over internal).
pub fn combine(failures: Vec<Failure>) -> Result<(), Failure> {
    if failures.is_empty() {
        return Ok(());
    }
    let rank = |c: u8| match c {
        CONFIG => 3,
        INPUT => 2,
        _ => 1,
    };
    let code = failures.iter().map(|f| f.code).max_by_key(|c| rank(*c)).unwrap_or(INTERNAL);
    let message = failures.into_iter().map(|f| f.message).collect::<Vec<_>>().join("\n");
    Err(Failure { code, message })
}
