//! Structural findings reported by the validators.
//!
//! Findings are data, never failures: every validator returns the full list
//! and leaves it to the caller to decide what is fatal.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Notice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ViolationCode {
    // requirements model
    DuplicateRequirementId,
    DuplicatePropertyId,
    DuplicateConstraintId,
    EmptyText,
    NoProperties,
    SelfRelation,
    DanglingEndpoint,
    DuplicateRelation,
    DuplicateRelationId,
    RelationCycle,
    DependencyCycle,
    Normalization,
    // architecture and traces
    DuplicateElementId,
    DanglingParent,
    ParentCycle,
    DanglingRequirement,
    DanglingElement,
    EmptyElementSet,
    DuplicateTrace,
    DuplicateTraceId,
    // changes
    UnknownRequirement,
    UnknownRelation,
    UnknownProperty,
    UnknownConstraint,
    PayloadMismatch,
    LastProperty,
    IntroducesViolation,
    // rules
    UnspecifiedCell,
    ForcedTraversal,
    EmptyCell,
    DuplicateEdit,
    // impact
    UntracedTerminals,
    DefaultedRule,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub severity: Severity,
    /// Id (or address) of the offending item.
    pub location: String,
    pub message: String,
}

impl Violation {
    pub fn error(code: ViolationCode, location: impl Into<String>, message: impl Into<String>) -> Self {
        Self { code, severity: Severity::Error, location: location.into(), message: message.into() }
    }

    pub fn notice(code: ViolationCode, location: impl Into<String>, message: impl Into<String>) -> Self {
        Self { code, severity: Severity::Notice, location: location.into(), message: message.into() }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    pub fn mentions(&self, id: &str) -> bool {
        self.location == id || self.location.split(&[',', ' ', '{', '}', '/'][..]).any(|p| p == id)
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Notice => "notice",
        };
        write!(f, "{sev}[{:?}] {}: {}", self.code, self.location, self.message)
    }
}

pub fn has_errors(violations: &[Violation]) -> bool {
    violations.iter().any(Violation::is_error)
}
