use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    /// Worth reporting, does not fail a run.
    Notice,
    /// Makes the CLI exit nonzero.
    Failure,
}

/// A condition raised by an analysis step and carried in its report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Flag {
    pub severity: Severity,
    pub source: String,
    pub message: String,
}

impl Flag {
    pub fn failure(source: &str, message: impl Into<String>) -> Self {
        Flag {
            severity: Severity::Failure,
            source: source.to_string(),
            message: message.into(),
        }
    }

    pub fn notice(source: &str, message: impl Into<String>) -> Self {
        Flag {
            severity: Severity::Notice,
            source: source.to_string(),
            message: message.into(),
        }
    }

    pub fn is_failure(&self) -> bool {
        self.severity == Severity::Failure
    }
}

pub fn any_failure(flags: &[Flag]) -> bool {
    flags.iter().any(Flag::is_failure)
}
