//! Outcome of a hypothesis-gated check.

use serde::Serialize;

/// A conditional statement is checked only when its hypotheses are
/// numerically established; otherwise the check is refused, which is not a
/// failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "reason", rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail(String),
    Refused(String),
}

impl CheckStatus {
    pub fn passed(&self) -> bool {
        matches!(self, CheckStatus::Pass)
    }

    pub fn refused(&self) -> bool {
        matches!(self, CheckStatus::Refused(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail(_) => "fail",
            CheckStatus::Refused(_) => "refused",
        }
    }
}
