//! Requirements change-impact analysis.
//!
//! A [`RequirementsModel`] holds requirements and the relations between them,
//! [`TraceModel`] links requirements to elements of an [`ArchitectureModel`].
//! A [`ProposedChange`] starts a propagation [`Session`]: the engineer picks
//! alternatives offered by the [`RuleSet`] until the propagation path is
//! complete, and the impact function then turns the path into candidate
//! architectural elements.

pub mod change;
pub mod error;
pub mod impact;
pub mod model;
pub mod propagation;
pub mod rules;
pub mod violation;

pub use change::{apply_change, check_change_wellformed, ChangeLog, ChangePayload, ChangeType, ProposedChange, Rationale};
pub use error::{Error, Result};
pub use impact::{
    candidates_from, impact, impact_of_added_requirement, impact_report, traverse, CandidateElement, ImpactAnalysis,
    ImpactFunctionInputs, ImpactReport, ImpactResult, ReportFormat, TraversalStep,
};
pub use model::{
    ArchElement, ArchitectureModel, Direction, Relation, RelationKind, Requirement, RequirementsModel, Trace, TraceKind,
    TraceModel,
};
pub use propagation::{start_session, ChoiceRecord, NodeStatus, PendingDecision, PropagationPath, Session};
pub use rules::{default_rules, load_rules, validate_rules, AtomicEdit, RuleKey, RuleSet};
pub use violation::{has_errors, Severity, Violation, ViolationCode};

/// Pretty-printed JSON with a trailing newline. Maps are ordered and model
/// collections are sorted, so equal values give byte-identical output.
pub fn to_canonical_json<T: serde::Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("model types always serialize");
    s.push('\n');
    s
}
