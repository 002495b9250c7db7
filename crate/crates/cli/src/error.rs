use std::fmt;

/// Failures of one invocation, mapped onto exit statuses.
#[derive(Debug)]
pub enum CliError {
    /// Unusable arguments or configuration.
    Invalid(String),
    /// Unreadable input or unwritable output.
    Io(String),
    Core(isl_core::Error),
    /// The computation finished but requested checks did not pass.
    ChecksFailed(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) | CliError::Io(_) => 2,
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Core(_) | CliError::ChecksFailed(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Invalid(_) => "invalid_input",
            CliError::Io(_) => "io",
            CliError::Core(e) if e.is_validation() => "validation",
            CliError::Core(_) => "numerical",
            CliError::ChecksFailed(_) => "check_failed",
        }
    }

    /// Machine-readable record printed on failure.
    pub fn record(&self) -> serde_json::Value {
        serde_json::json!({
            "error": {
                "kind": self.kind(),
                "message": self.to_string(),
                "exit_code": self.exit_code(),
            }
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) | CliError::Io(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::ChecksFailed(names) => write!(f, "checks failed: {}", names.join(", ")),
        }
    }
}

impl std::error::Error for CliError {}

impl From<isl_core::Error> for CliError {
    fn from(e: isl_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Invalid(format!("JSON: {e}"))
    }
}

impl From<toml::de::Error> for CliError {
    fn from(e: toml::de::Error) -> Self {
        CliError::Invalid(format!("configuration: {e}"))
    }
}
