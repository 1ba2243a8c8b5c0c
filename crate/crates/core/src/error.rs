use thiserror::Error;

use crate::violation::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown requirement `{0}`")]
    UnknownRequirement(String),
    #[error("ill-formed change: {}", summarize(.0))]
    IllFormedChange(Vec<Violation>),
    #[error("unknown decision `{0}`")]
    UnknownDecision(String),
    #[error("decision `{0}` has already been resolved")]
    DecisionClosed(String),
    #[error("`{pick}` is not an alternative of decision `{decision}`")]
    IllegalAlternative { decision: String, pick: String },
    #[error("decision `{0}` addresses an unspecified rule cell and needs a justification")]
    MissingJustification(String),
    #[error("propagation path is not complete; resolve the pending decisions first")]
    IncompletePath,
    #[error("`{0}` is not an impacted requirement of the propagation path")]
    UnknownSelection(String),
    #[error("malformed rule document: {0}")]
    MalformedRuleDocument(String),
    #[error("rule cell `{0}` redefines a published cell; set \"override\": true to replace it")]
    ConflictingCell(String),
    #[error("replay diverged: {0}")]
    ReplayDiverged(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn summarize(violations: &[Violation]) -> String {
    violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
