//! Error taxonomy mapped to exit codes, with a machine-readable summary
//! printed to stderr on failure.

use serde::Serialize;

/// Failure kinds in exit-code order: 1 validation, 2 provider, 3 data
/// integrity, 4 io.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments; carries every violation found.
    Validation(Vec<String>),
    /// A chat or embedding provider was unavailable or kept failing.
    Provider(String),
    /// An input artifact (corpus, store, rankings, report) is malformed.
    Data(String),
    /// Filesystem trouble reading or writing artifacts.
    Io(String),
}

#[derive(Serialize)]
struct ErrorSummary<'a> {
    kind: &'a str,
    exit_code: i32,
    messages: &'a [String],
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> CliError {
        CliError::Validation(vec![message.into()])
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Provider(_) => "provider",
            CliError::Data(_) => "data",
            CliError::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Provider(_) => 2,
            CliError::Data(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn messages(&self) -> Vec<String> {
        match self {
            CliError::Validation(v) => v.clone(),
            CliError::Provider(m) | CliError::Data(m) | CliError::Io(m) => vec![m.clone()],
        }
    }

    /// One JSON line for scripts plus human-readable lines after it.
    pub fn render(&self) -> String {
        let messages = self.messages();
        let summary = ErrorSummary {
            kind: self.kind(),
            exit_code: self.exit_code(),
            messages: &messages,
        };
        let mut out = serde_json::json!({ "error": summary }).to_string();
        for m in &messages {
            out.push('\n');
            out.push_str("error: ");
            out.push_str(m);
        }
        out
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.kind(), self.messages().join("; "))
    }
}

/// Tag an io::Result with the path it touched.
pub fn io_at<T>(path: &std::path::Path, result: std::io::Result<T>) -> Result<T, CliError> {
    result.map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
