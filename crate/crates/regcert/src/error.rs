//! Machine-readable failures; printed as JSON on standard error.

use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliError {
    /// Stable category: `io`, `parse`, `validation`, `budget`,
    /// `arithmetic`, `hypothesis`, `numerical` or `internal`.
    pub kind: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
}

impl CliError {
    fn new(kind: &str, message: String) -> Self {
        Self { kind: kind.into(), message, path: None, line: None }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self { path: Some(path.display().to_string()), ..Self::new("io", e.to_string()) }
    }

    pub fn parse(path: &Path, line: Option<usize>, message: String) -> Self {
        Self { path: Some(path.display().to_string()), line, ..Self::new("parse", message) }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new("validation", message.into())
    }

    pub fn internal(message: String) -> Self {
        Self::new("internal", message)
    }
}

impl From<regcert_core::Error> for CliError {
    fn from(e: regcert_core::Error) -> Self {
        use regcert_core::Error as E;
        let kind = match &e {
            E::BudgetExceeded { .. } => "budget",
            E::ExactArithmeticRequired(_) => "arithmetic",
            E::Hypothesis(_) => "hypothesis",
            E::Infeasible(_) | E::NotPsd(_) => "numerical",
            _ => "validation",
        };
        Self::new(kind, e.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl std::error::Error for CliError {}
