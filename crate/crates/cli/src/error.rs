use nsens::ErrorClass;
use serde::Serialize;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CAP: i32 = 3;
pub const EXIT_VIOLATION: i32 = 4;

/// An error on its way to stderr as one JSON object.
#[derive(Debug, Serialize)]
pub struct CliError {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { kind: "Config".into(), message: message.into(), exit_code: EXIT_CONFIG }
    }

    pub fn io(e: std::io::Error) -> Self {
        Self { kind: "Io".into(), message: e.to_string(), exit_code: EXIT_CONFIG }
    }

    pub fn violation(message: impl Into<String>) -> Self {
        Self { kind: "PropertyViolation".into(), message: message.into(), exit_code: EXIT_VIOLATION }
    }
}

impl From<nsens::Error> for CliError {
    fn from(e: nsens::Error) -> Self {
        let exit_code = match e.class() {
            ErrorClass::Config => EXIT_CONFIG,
            ErrorClass::NumericCap => EXIT_CAP,
        };
        Self { kind: e.kind().into(), message: e.to_string(), exit_code }
    }
}
