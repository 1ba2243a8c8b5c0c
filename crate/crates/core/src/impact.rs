//! Architecture impact of a requirements change.
//!
//! The impact function takes a change type, the requirement it was introduced
//! to, the relation context (the propagation path) and the traces, and returns
//! the architectural elements that are candidates for the impact:
//!
//! * relation changes and refactorings never reach the architecture;
//! * an added property yields no automatic suggestion;
//! * an added requirement is evaluated against the add-requirement table;
//! * deletions and the remaining updates traverse the propagation path (see
//!   [`traverse`]) and collect elements traced from the terminal requirements.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::change::{ChangePayload, ChangeType, ProposedChange, Rationale};
use crate::error::{Error, Result};
use crate::model::{Direction, Relation, RelationKind, Requirement, TraceKind, TraceModel};
use crate::propagation::{PropagationPath, Session};
use crate::rules::{AddRequirementRule, RuleKey, RuleSet, TraversalRule};
use crate::violation::{Violation, ViolationCode};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CandidateElement {
    pub element: String,
    pub kind: TraceKind,
    pub trace_id: String,
    pub via_requirement: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImpactResult {
    Candidates(Vec<CandidateElement>),
    NoArchImpact(String),
    ManualAnalysisRequired(String),
}

impl ImpactResult {
    pub fn outcome(&self) -> &'static str {
        match self {
            ImpactResult::Candidates(_) => "Candidates",
            ImpactResult::NoArchImpact(_) => "NoArchImpact",
            ImpactResult::ManualAnalysisRequired(_) => "ManualAnalysisRequired",
        }
    }

    pub fn candidates(&self) -> &[CandidateElement] {
        match self {
            ImpactResult::Candidates(c) => c,
            _ => &[],
        }
    }

    pub fn reason(&self) -> Option<&str> {
        match self {
            ImpactResult::Candidates(_) => None,
            ImpactResult::NoArchImpact(r) | ImpactResult::ManualAnalysisRequired(r) => Some(r),
        }
    }

    pub fn element_ids(&self) -> BTreeSet<&str> {
        self.candidates().iter().map(|c| c.element.as_str()).collect()
    }
}

/// One step the traversal took from `from` to `to`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TraversalStep {
    pub from: String,
    pub to: String,
    pub relation: String,
    pub kind: RelationKind,
    pub direction: Direction,
    pub change: ChangeType,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Traversal {
    pub terminals: BTreeSet<String>,
    pub steps: BTreeSet<TraversalStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImpactAnalysis {
    pub result: ImpactResult,
    /// Requirements whose traces produced the candidates.
    pub terminals: Vec<String>,
    pub steps: Vec<TraversalStep>,
    pub notices: Vec<Violation>,
}

impl ImpactAnalysis {
    fn without_candidates(result: ImpactResult) -> Self {
        Self { result, terminals: Vec::new(), steps: Vec::new(), notices: Vec::new() }
    }
}

/// The four inputs of the impact function.
#[derive(Debug, Clone, Copy)]
pub struct ImpactFunctionInputs<'a> {
    pub change: &'a ProposedChange,
    pub requirement: &'a str,
    pub path: Option<&'a PropagationPath>,
    pub traces: &'a TraceModel,
}

impl ImpactFunctionInputs<'_> {
    pub fn evaluate(&self, rules: &RuleSet) -> Result<ImpactAnalysis> {
        impact(self.change, self.requirement, self.path, self.traces, rules)
    }
}

pub fn impact(
    change: &ProposedChange,
    selected: &str,
    path: Option<&PropagationPath>,
    traces: &TraceModel,
    rules: &RuleSet,
) -> Result<ImpactAnalysis> {
    if change.rationale == Rationale::Refactoring {
        return Ok(ImpactAnalysis::without_candidates(ImpactResult::NoArchImpact(
            "refactoring restructures the requirements model without modifying system properties".into(),
        )));
    }
    match change.change_type {
        t if t.is_relation_change() => Ok(ImpactAnalysis::without_candidates(ImpactResult::NoArchImpact(
            "relation changes do not modify any system property".into(),
        ))),
        ChangeType::AddProperty => Ok(ImpactAnalysis::without_candidates(ImpactResult::ManualAnalysisRequired(
            "the requirement carries no explicit dependency between its existing properties and the added one; \
             candidates must be identified manually"
                .into(),
        ))),
        ChangeType::AddRequirement => match &change.payload {
            Some(ChangePayload::Requirement { requirement, relations }) => {
                Ok(impact_of_added_requirement(requirement, relations, traces, rules))
            }
            _ => Err(Error::IllFormedChange(vec![Violation::error(
                ViolationCode::PayloadMismatch,
                change.id.clone(),
                "AddRequirement expects a `requirement` payload",
            )])),
        },
        _ => {
            let path = match path {
                Some(p) if p.complete => p,
                _ => return Err(Error::IncompletePath),
            };
            let traversal = traverse_with_steps(path, selected, rules)?;
            let (candidates, notices) = candidates_with_notices(&traversal.terminals, traces);
            Ok(ImpactAnalysis {
                result: ImpactResult::Candidates(candidates),
                terminals: traversal.terminals.into_iter().collect(),
                steps: traversal.steps.into_iter().collect(),
                notices,
            })
        }
    }
}

/// Impact of adding `new_req` together with its `relations`.
pub fn impact_of_added_requirement(
    new_req: &Requirement,
    relations: &[Relation],
    traces: &TraceModel,
    rules: &RuleSet,
) -> ImpactAnalysis {
    if relations.is_empty() {
        return ImpactAnalysis::without_candidates(ImpactResult::ManualAnalysisRequired(
            "the added requirement has no relation to existing requirements; no candidate can be identified automatically"
                .into(),
        ));
    }
    let mut notices = Vec::new();
    let mut sources = BTreeSet::new();
    for rel in relations {
        let Some(existing) = rel.other_end(&new_req.id) else { continue };
        let direction = if rel.source == new_req.id { Direction::Outgoing } else { Direction::Incoming };
        let (rule, published) = rules.add_requirement(rel.kind, direction);
        if !published {
            notices.push(Violation::notice(
                ViolationCode::DefaultedRule,
                rel.id.clone(),
                format!("no add-requirement rule for `{rel}`; assumed no impacted element"),
            ));
        }
        if rule == AddRequirementRule::TracedFromExisting {
            sources.insert(existing.to_string());
        }
    }
    if sources.is_empty() {
        let mut analysis = ImpactAnalysis::without_candidates(ImpactResult::NoArchImpact(
            "the added requirement introduces no new system property next to its related requirements".into(),
        ));
        analysis.notices = notices;
        return analysis;
    }
    let (candidates, more) = candidates_with_notices(&sources, traces);
    notices.extend(more);
    ImpactAnalysis {
        result: ImpactResult::Candidates(candidates),
        terminals: sources.into_iter().collect(),
        steps: Vec::new(),
        notices,
    }
}

/// Terminal requirements reached from `selected` over the propagation path.
pub fn traverse(path: &PropagationPath, selected: &str, rules: &RuleSet) -> Result<BTreeSet<String>> {
    traverse_with_steps(path, selected, rules).map(|t| t.terminals)
}

/// Depth-first walk over propagation edges. At node `c`, an edge to an impacted
/// `k` not yet on the current walk is taken when the traversal table says
/// `Take` for the change accepted at `c`, the relation kind and the direction
/// seen from `c`. A node from which no step is taken is a terminal.
pub fn traverse_with_steps(path: &PropagationPath, selected: &str, rules: &RuleSet) -> Result<Traversal> {
    if !path.status(selected).is_impacted() {
        return Err(Error::UnknownSelection(selected.to_string()));
    }
    let mut out = Traversal::default();
    let mut walk = vec![selected.to_string()];
    descend(path, rules, &mut walk, &mut out);
    Ok(out)
}

fn change_at(path: &PropagationPath, node: &str) -> Option<ChangeType> {
    path.nodes.get(node)?.accepted_change.as_ref().map(|c| c.change_type)
}

fn descend(path: &PropagationPath, rules: &RuleSet, walk: &mut Vec<String>, out: &mut Traversal) {
    let current = walk.last().cloned().unwrap_or_default();
    let mut took = false;
    if let Some(change) = change_at(path, &current) {
        for edge in path.edges_at(&current) {
            let (Some(next), Some(direction)) = (edge.other_end(&current), edge.direction_from(&current)) else {
                continue;
            };
            if walk.iter().any(|n| n == next) || !path.status(next).is_impacted() {
                continue;
            }
            if rules.traversal(RuleKey::new(change, edge.kind, direction)) != TraversalRule::Take {
                continue;
            }
            took = true;
            out.steps.insert(TraversalStep {
                from: current.clone(),
                to: next.to_string(),
                relation: edge.relation.clone(),
                kind: edge.kind,
                direction,
                change,
            });
            walk.push(next.to_string());
            descend(path, rules, walk, out);
            walk.pop();
        }
    }
    if !took {
        out.terminals.insert(current);
    }
}

/// Elements traced from `terminals`, one entry per element.
pub fn candidates_from(terminals: &BTreeSet<String>, traces: &TraceModel) -> Vec<CandidateElement> {
    candidates_with_notices(terminals, traces).0
}

/// Like [`candidates_from`], also reporting terminals without any trace.
///
/// When several traces reach one element, the reported support prefers a
/// `Satisfies` trace, then the smallest trace id.
pub fn candidates_with_notices(terminals: &BTreeSet<String>, traces: &TraceModel) -> (Vec<CandidateElement>, Vec<Violation>) {
    let mut by_element: BTreeMap<String, CandidateElement> = BTreeMap::new();
    let mut untraced = Vec::new();
    for terminal in terminals {
        let mut found = false;
        for trace in traces.for_requirement(terminal) {
            found = true;
            for element in &trace.elements {
                let candidate = CandidateElement {
                    element: element.clone(),
                    kind: trace.kind,
                    trace_id: trace.id.clone(),
                    via_requirement: terminal.clone(),
                };
                by_element
                    .entry(element.clone())
                    .and_modify(|existing| {
                        if (candidate.kind, &candidate.trace_id) < (existing.kind, &existing.trace_id) {
                            *existing = candidate.clone();
                        }
                    })
                    .or_insert(candidate);
            }
        }
        if !found {
            untraced.push(terminal.clone());
        }
    }
    let mut notices = Vec::new();
    if !untraced.is_empty() {
        notices.push(Violation::notice(
            ViolationCode::UntracedTerminals,
            untraced.join(","),
            "terminal requirements without any trace to the architecture",
        ));
    }
    (by_element.into_values().collect(), notices)
}

impl Session {
    /// Runs the impact function for an impacted requirement of this session,
    /// using the change accepted at that requirement.
    pub fn impact(&self, selected: &str) -> Result<ImpactAnalysis> {
        let node = self
            .path
            .nodes
            .get(selected)
            .filter(|n| n.status.is_impacted())
            .ok_or_else(|| Error::UnknownSelection(selected.to_string()))?;
        let change = node.accepted_change.as_ref().unwrap_or(&self.initial_change);
        impact(change, selected, Some(&self.path), &self.traces, &self.rules)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImpactReport {
    pub change: ProposedChange,
    pub rationale: Rationale,
    pub selected: String,
    pub selected_change: ChangeType,
    pub outcome: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub terminals: Vec<String>,
    pub steps: Vec<TraversalStep>,
    pub candidates: Vec<CandidateElement>,
    pub notices: Vec<Violation>,
    pub path: PropagationPath,
}

impl ImpactReport {
    pub fn new(analysis: &ImpactAnalysis, session: &Session, selected: &str) -> Self {
        let selected_change = session
            .path
            .nodes
            .get(selected)
            .and_then(|n| n.accepted_change.as_ref())
            .map_or(session.initial_change.change_type, |c| c.change_type);
        Self {
            change: session.initial_change.clone(),
            rationale: session.initial_change.rationale,
            selected: selected.to_string(),
            selected_change,
            outcome: analysis.result.outcome().to_string(),
            reason: analysis.result.reason().map(str::to_string),
            terminals: analysis.terminals.clone(),
            steps: analysis.steps.clone(),
            candidates: analysis.result.candidates().to_vec(),
            notices: analysis.notices.clone(),
            path: session.path.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        crate::to_canonical_json(self)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "change      {} {} on {} ({:?})", self.change.id, self.change.change_type, self.change.target, self.rationale);
        let _ = writeln!(s, "selected    {} ({})", self.selected, self.selected_change);
        let _ = writeln!(s, "outcome     {}", self.outcome);
        if let Some(reason) = &self.reason {
            let _ = writeln!(s, "reason      {reason}");
        }
        if !self.steps.is_empty() {
            let _ = writeln!(s, "\ntraversal");
            for step in &self.steps {
                let _ = writeln!(s, "  {} -> {}  via {} ({} {})", step.from, step.to, step.relation, step.kind, step.direction.address());
            }
        }
        if !self.terminals.is_empty() {
            let _ = writeln!(s, "\nterminals   {}", self.terminals.join(", "));
        }
        if !self.candidates.is_empty() {
            let width = self.candidates.iter().map(|c| c.element.len()).max().unwrap_or(0).max(7);
            let _ = writeln!(s, "\n{:<width$}  {:<11}  {:<12}  requirement", "element", "kind", "trace");
            for c in &self.candidates {
                let _ = writeln!(s, "{:<width$}  {:<11}  {:<12}  {}", c.element, c.kind.to_string(), c.trace_id, c.via_requirement);
            }
        }
        for n in &self.notices {
            let _ = writeln!(s, "\n{n}");
        }
        s
    }
}

/// Renders `analysis` for `session` in the requested format.
pub fn impact_report(analysis: &ImpactAnalysis, session: &Session, selected: &str, format: ReportFormat) -> String {
    let report = ImpactReport::new(analysis, session, selected);
    match format {
        ReportFormat::Json => report.to_json(),
        ReportFormat::Text => report.to_text(),
    }
}
