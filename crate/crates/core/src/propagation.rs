//! Step-by-step change propagation.
//!
//! A [`Session`] starts from one proposed change on one requirement (the
//! starting-impacted node). Every relation of an impacted requirement to an
//! unvisited one becomes a [`PendingDecision`] whose alternatives come from
//! the propagation table. The engineer resolves decisions one at a time;
//! a propagated change makes the neighbour impacted and opens its own
//! relations, `NoImpact` stops the propagation at that neighbour.
//!
//! The first visit of a requirement wins. Relations that would revisit a
//! requirement are kept as cross links and never produce a decision.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::change::{check_change_wellformed, ChangePayload, ChangeType, ProposedChange, Rationale};
use crate::error::{Error, Result};
use crate::model::{Direction, Relation, RelationKind, RequirementsModel, TraceModel};
use crate::rules::{AlternativeSet, AtomicEdit, PropagationCell, RuleKey, RuleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeStatus {
    StartingImpacted,
    Impacted,
    NoImpact,
    Unvisited,
}

impl NodeStatus {
    pub fn is_impacted(self) -> bool {
        matches!(self, NodeStatus::StartingImpacted | NodeStatus::Impacted)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathNode {
    pub requirement: String,
    pub status: NodeStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accepted_change: Option<ProposedChange>,
}

/// A resolved relation: the change traveled (or was stopped) from `from` to `to`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathEdge {
    pub relation: String,
    pub kind: RelationKind,
    pub source: String,
    pub target: String,
    pub from: String,
    pub to: String,
    pub edit: AtomicEdit,
    #[serde(default)]
    pub automatic: bool,
    #[serde(default)]
    pub unspecified_cell: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub justification: Option<String>,
}

impl PathEdge {
    /// Orientation of the relation seen from `node`, if it is an endpoint.
    pub fn direction_from(&self, node: &str) -> Option<Direction> {
        if self.source == node {
            Some(Direction::Outgoing)
        } else if self.target == node {
            Some(Direction::Incoming)
        } else {
            None
        }
    }

    pub fn other_end(&self, node: &str) -> Option<&str> {
        if self.source == node {
            Some(&self.target)
        } else if self.target == node {
            Some(&self.source)
        } else {
            None
        }
    }
}

/// A relation between two already visited requirements that produced no decision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossLink {
    pub relation: String,
    pub kind: RelationKind,
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropagationPath {
    pub nodes: BTreeMap<String, PathNode>,
    /// Relations the change traveled over; every `to` is impacted.
    pub edges: Vec<PathEdge>,
    /// Relations resolved without impact (`NoImpact` or `DeleteRelation`).
    pub pruned: Vec<PathEdge>,
    pub cross_links: Vec<CrossLink>,
    pub complete: bool,
}

impl PropagationPath {
    pub fn status(&self, req: &str) -> NodeStatus {
        self.nodes.get(req).map_or(NodeStatus::Unvisited, |n| n.status)
    }

    pub fn starting_node(&self) -> Option<&PathNode> {
        self.nodes.values().find(|n| n.status == NodeStatus::StartingImpacted)
    }

    pub fn impacted(&self) -> impl Iterator<Item = &PathNode> {
        self.nodes.values().filter(|n| n.status.is_impacted())
    }

    /// Propagation edges incident to `node`, ordered by relation id.
    pub fn edges_at<'a>(&'a self, node: &'a str) -> Vec<&'a PathEdge> {
        let mut edges: Vec<&PathEdge> = self.edges.iter().filter(|e| e.direction_from(node).is_some()).collect();
        edges.sort_by(|a, b| a.relation.cmp(&b.relation));
        edges
    }

    fn closes(&self, relation: &str) -> bool {
        self.edges.iter().chain(&self.pruned).any(|e| e.relation == relation)
            || self.cross_links.iter().any(|c| c.relation == relation)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingDecision {
    pub id: String,
    pub relation: Relation,
    pub from: String,
    pub to: String,
    pub alternatives: AlternativeSet,
    /// The rule table has no cell for this key; `alternatives` is the full menu
    /// and the pick must carry a justification.
    pub unspecified_cell: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChoiceRecord {
    #[serde(default)]
    pub seq: u64,
    pub decision: String,
    pub pick: AtomicEdit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub justification: Option<String>,
}

impl ChoiceRecord {
    pub fn new(decision: impl Into<String>, pick: AtomicEdit) -> Self {
        Self { seq: 0, decision: decision.into(), pick, justification: None }
    }

    pub fn justified(mut self, text: impl Into<String>) -> Self {
        self.justification = Some(text.into());
        self
    }
}

pub fn decision_id(relation: &str) -> String {
    format!("D-{relation}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub initial_change: ProposedChange,
    pub log: Vec<ChoiceRecord>,
    pub path: PropagationPath,
    pub pending: Vec<PendingDecision>,
    #[serde(default)]
    pub notices: Vec<String>,
    pub model: Arc<RequirementsModel>,
    pub traces: Arc<TraceModel>,
    pub rules: Arc<RuleSet>,
}

pub fn start_session(
    model: Arc<RequirementsModel>,
    traces: Arc<TraceModel>,
    change: ProposedChange,
    rules: Arc<RuleSet>,
) -> Result<Session> {
    Session::start(model, traces, change, rules)
}

impl Session {
    pub fn start(
        model: Arc<RequirementsModel>,
        traces: Arc<TraceModel>,
        change: ProposedChange,
        rules: Arc<RuleSet>,
    ) -> Result<Self> {
        let ty = change.change_type;
        if !ty.targets_relation() && ty != ChangeType::AddRequirement && !model.contains_requirement(&change.target) {
            return Err(Error::UnknownRequirement(change.target.clone()));
        }
        let violations = check_change_wellformed(&model, &change);
        if !violations.is_empty() {
            return Err(Error::IllFormedChange(violations));
        }

        let start = match (ty, &change.payload) {
            (ChangeType::AddRelation, Some(ChangePayload::Relation { relation })) => relation.source.clone(),
            (t, _) if t.targets_relation() => model
                .relation(&change.target)
                .map(|r| r.source.clone())
                .ok_or_else(|| Error::UnknownRequirement(change.target.clone()))?,
            _ => change.target.clone(),
        };

        let mut session = Session {
            id: format!("session-{}", change.id),
            initial_change: change.clone(),
            log: Vec::new(),
            path: PropagationPath::default(),
            pending: Vec::new(),
            notices: Vec::new(),
            model,
            traces,
            rules,
        };
        session.path.nodes.insert(
            start.clone(),
            PathNode { requirement: start.clone(), status: NodeStatus::StartingImpacted, accepted_change: Some(change) },
        );
        if session.initial_change.rationale == Rationale::DomainChange && ty.is_propagatable() {
            session.expand(&start, ty);
        }
        session.path.complete = session.pending.is_empty();
        Ok(session)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn pending_decisions(&self) -> &[PendingDecision] {
        &self.pending
    }

    pub fn is_complete(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn path(&self) -> &PropagationPath {
        &self.path
    }

    pub fn status(&self, req: &str) -> NodeStatus {
        self.path.status(req)
    }

    /// Resolves one decision, returning the next session state.
    pub fn choose(&self, decision: &str, pick: AtomicEdit, justification: Option<&str>) -> Result<Session> {
        let mut next = self.clone();
        next.apply_choice(ChoiceRecord {
            seq: 0,
            decision: decision.to_string(),
            pick,
            justification: justification.map(str::to_string),
        })?;
        Ok(next)
    }

    /// In-place variant of [`Session::choose`]. On error the session is unchanged.
    pub fn apply_choice(&mut self, mut choice: ChoiceRecord) -> Result<()> {
        let Some(index) = self.pending.iter().position(|d| d.id == choice.decision) else {
            let closed = choice
                .decision
                .strip_prefix("D-")
                .is_some_and(|rel| self.path.closes(rel));
            return Err(if closed {
                Error::DecisionClosed(choice.decision)
            } else {
                Error::UnknownDecision(choice.decision)
            });
        };
        let justification = choice.justification.as_deref().map(str::trim).filter(|j| !j.is_empty());
        {
            let decision = &self.pending[index];
            let illegal = || Error::IllegalAlternative { decision: decision.id.clone(), pick: choice.pick.to_string() };
            if decision.unspecified_cell {
                if justification.is_none() {
                    return Err(Error::MissingJustification(decision.id.clone()));
                }
                if choice.pick.propagated_change().is_some_and(|t| !t.is_propagatable()) {
                    return Err(illegal());
                }
            } else if !decision.alternatives.contains(choice.pick) {
                return Err(illegal());
            }
        }

        let decision = self.pending.remove(index);
        choice.seq = self.log.len() as u64 + 1;
        let edge = PathEdge {
            relation: decision.relation.id.clone(),
            kind: decision.relation.kind,
            source: decision.relation.source.clone(),
            target: decision.relation.target.clone(),
            from: decision.from.clone(),
            to: decision.to.clone(),
            edit: choice.pick,
            automatic: false,
            unspecified_cell: decision.unspecified_cell,
            justification: choice.justification.clone(),
        };
        self.log.push(choice);

        match edge.edit.propagated_change() {
            Some(ty) => {
                let change = self.derived_change(&decision.to, ty);
                self.path.nodes.insert(
                    decision.to.clone(),
                    PathNode { requirement: decision.to.clone(), status: NodeStatus::Impacted, accepted_change: Some(change) },
                );
                self.path.edges.push(edge);
                self.supersede(&decision.to);
                self.expand(&decision.to, ty);
            }
            None => {
                self.mark_no_impact(&decision.to);
                self.path.pruned.push(edge);
                self.supersede(&decision.to);
            }
        }
        self.path.complete = self.pending.is_empty();
        Ok(())
    }

    /// Re-runs the logged choices from the initial change.
    pub fn replay(&self) -> Result<Session> {
        self.replay_script(&self.log)
    }

    /// Starts over from the initial change and applies `script` in order.
    pub fn replay_script(&self, script: &[ChoiceRecord]) -> Result<Session> {
        let mut session =
            Session::start(self.model.clone(), self.traces.clone(), self.initial_change.clone(), self.rules.clone())?
                .with_id(self.id.clone());
        for choice in script {
            session.apply_choice(choice.clone())?;
        }
        Ok(session)
    }

    pub fn to_json(&self) -> String {
        crate::to_canonical_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    fn derived_change(&self, req: &str, change_type: ChangeType) -> ProposedChange {
        ProposedChange {
            id: format!("{}@{req}", self.initial_change.id),
            change_type,
            rationale: self.initial_change.rationale,
            target: req.to_string(),
            payload: None,
            description: self.initial_change.description.clone(),
        }
    }

    fn mark_no_impact(&mut self, req: &str) {
        self.path.nodes.insert(
            req.to_string(),
            PathNode { requirement: req.to_string(), status: NodeStatus::NoImpact, accepted_change: None },
        );
    }

    /// Drops pending decisions into a requirement that has just been visited.
    fn supersede(&mut self, req: &str) {
        let (dropped, kept): (Vec<_>, Vec<_>) = std::mem::take(&mut self.pending).into_iter().partition(|d| d.to == req);
        self.pending = kept;
        for d in dropped {
            self.notices.push(format!(
                "decision `{}` dropped: `{req}` was already visited; `{}` is recorded as a cross link",
                d.id, d.relation
            ));
            self.cross_link(&d.relation);
        }
    }

    fn cross_link(&mut self, rel: &Relation) {
        if !self.path.cross_links.iter().any(|c| c.relation == rel.id) {
            self.path.cross_links.push(CrossLink {
                relation: rel.id.clone(),
                kind: rel.kind,
                source: rel.source.clone(),
                target: rel.target.clone(),
            });
        }
    }

    /// Opens decisions for every relation of the newly impacted `node`.
    fn expand(&mut self, node: &str, change_type: ChangeType) {
        let model = self.model.clone();
        let Ok(neighbors) = model.neighbors(node) else { return };
        for (rel, direction) in neighbors {
            if self.path.closes(&rel.id) || self.pending.iter().any(|d| d.relation.id == rel.id) {
                continue;
            }
            let Some(other) = rel.other_end(node) else { continue };
            if self.path.nodes.contains_key(other) {
                self.cross_link(rel);
                continue;
            }
            let key = RuleKey::new(change_type, rel.kind, direction);
            let rules = self.rules.clone();
            match rules.propagation(key) {
                PropagationCell::Alternatives(set) if set.is_only_no_impact() => {
                    self.mark_no_impact(other);
                    self.path.pruned.push(PathEdge {
                        relation: rel.id.clone(),
                        kind: rel.kind,
                        source: rel.source.clone(),
                        target: rel.target.clone(),
                        from: node.to_string(),
                        to: other.to_string(),
                        edit: AtomicEdit::NoImpact,
                        automatic: true,
                        unspecified_cell: false,
                        justification: None,
                    });
                    self.supersede(other);
                }
                PropagationCell::Alternatives(set) => self.pending.push(PendingDecision {
                    id: decision_id(&rel.id),
                    relation: rel.clone(),
                    from: node.to_string(),
                    to: other.to_string(),
                    alternatives: set.clone(),
                    unspecified_cell: false,
                }),
                PropagationCell::Unspecified => self.pending.push(PendingDecision {
                    id: decision_id(&rel.id),
                    relation: rel.clone(),
                    from: node.to_string(),
                    to: other.to_string(),
                    alternatives: full_menu(change_type),
                    unspecified_cell: true,
                }),
            }
        }
        self.pending.sort_by(|a, b| a.from.cmp(&b.from).then_with(|| a.relation.id.cmp(&b.relation.id)));
    }
}

/// Every kind of edit, with propagation parameterized by the change at `from`.
pub fn full_menu(change_type: ChangeType) -> AlternativeSet {
    AlternativeSet::new(vec![
        AtomicEdit::NoImpact,
        AtomicEdit::PropagateChange(change_type),
        AtomicEdit::PropagateChangeAndDeleteRelation(change_type),
        AtomicEdit::DeleteRelation,
        AtomicEdit::DeleteRequirementAndRelation,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Constraint, Property, Requirement};
    use crate::rules::default_rules;

    fn req(id: &str) -> Requirement {
        Requirement {
            id: id.into(),
            text: format!("The system shall {id}."),
            properties: vec![Property { id: "P1".into(), text: id.into(), constraints: vec![] }],
        }
    }

    fn session(rels: Vec<Relation>, ids: &[&str], target: &str) -> Result<Session> {
        let model = RequirementsModel::new(ids.iter().map(|i| req(i)).collect(), rels);
        let change = ProposedChange::add_constraint("c1", target, "P1", Constraint { id: "C1".into(), text: "more".into() });
        Session::start(Arc::new(model), Arc::new(TraceModel::default()), change, Arc::new(default_rules()))
    }

    #[test]
    fn isolated_requirement_completes_immediately() {
        let s = session(vec![], &["R1"], "R1").unwrap();
        assert!(s.is_complete());
        assert_eq!(s.path.nodes.len(), 1);
        assert_eq!(s.status("R1"), NodeStatus::StartingImpacted);
    }

    #[test]
    fn singleton_no_impact_cell_auto_resolves() {
        let s = session(vec![Relation::new("r", "R1", RelationKind::Requires, "R2")], &["R1", "R2"], "R1").unwrap();
        assert!(s.is_complete());
        assert_eq!(s.status("R2"), NodeStatus::NoImpact);
        assert!(s.path.pruned[0].automatic);
        assert!(s.log.is_empty());
    }

    #[test]
    fn unknown_target_and_ill_formed_change() {
        assert!(matches!(session(vec![], &["R1"], "R9"), Err(Error::UnknownRequirement(_))));
        let model = Arc::new(RequirementsModel::new(vec![req("R1")], vec![]));
        let bad = ProposedChange::add_constraint("c", "R1", "nope", Constraint { id: "C".into(), text: "t".into() });
        let err = Session::start(model, Arc::default(), bad, Arc::new(default_rules())).unwrap_err();
        assert!(matches!(err, Error::IllFormedChange(_)));
    }

    #[test]
    fn refactoring_sessions_do_not_propagate() {
        let model = RequirementsModel::new(
            vec![req("R1"), req("R2")],
            vec![Relation::new("r", "R1", RelationKind::Contains, "R2")],
        );
        let mut change = ProposedChange::add_constraint("c", "R1", "P1", Constraint { id: "C".into(), text: "t".into() });
        change.rationale = Rationale::Refactoring;
        let s = Session::start(Arc::new(model), Arc::default(), change, Arc::new(default_rules())).unwrap();
        assert!(s.is_complete());
        assert_eq!(s.status("R2"), NodeStatus::Unvisited);
    }

    #[test]
    fn decision_errors() {
        let s = session(vec![Relation::new("r", "R1", RelationKind::Contains, "R2")], &["R1", "R2"], "R1").unwrap();
        assert!(matches!(s.choose("D-x", AtomicEdit::NoImpact, None), Err(Error::UnknownDecision(_))));
        assert!(matches!(
            s.choose("D-r", AtomicEdit::DeleteRequirementAndRelation, None),
            Err(Error::IllegalAlternative { .. })
        ));
        let done = s.choose("D-r", AtomicEdit::NoImpact, None).unwrap();
        assert!(matches!(done.choose("D-r", AtomicEdit::NoImpact, None), Err(Error::DecisionClosed(_))));
        assert!(!s.is_complete());
        assert!(done.is_complete());
    }

    #[test]
    fn unspecified_cell_requires_justification() {
        // incoming PartiallyRefines has no published propagation cell
        let s = session(vec![Relation::new("r", "R9", RelationKind::PartiallyRefines, "R7")], &["R7", "R9"], "R7").unwrap();
        let d = &s.pending[0];
        assert!(d.unspecified_cell);
        assert_eq!(d.alternatives, full_menu(ChangeType::AddConstraintToProperty));
        let pick = AtomicEdit::PropagateChange(ChangeType::AddConstraintToProperty);
        assert!(matches!(s.choose("D-r", pick, None), Err(Error::MissingJustification(_))));
        assert!(matches!(s.choose("D-r", pick, Some("  ")), Err(Error::MissingJustification(_))));
        assert!(matches!(
            s.choose("D-r", AtomicEdit::PropagateChange(ChangeType::AddRelation), Some("x")),
            Err(Error::IllegalAlternative { .. })
        ));
        let next = s.choose("D-r", pick, Some("R9 refines the warning property")).unwrap();
        assert_eq!(next.status("R9"), NodeStatus::Impacted);
        assert!(next.path.edges[0].unspecified_cell);
    }

    #[test]
    fn first_visit_wins_and_drops_parallel_decisions() {
        // R1 contains R2 and R3; both contain R4
        let rels = vec![
            Relation::new("a", "R1", RelationKind::Contains, "R2"),
            Relation::new("b", "R1", RelationKind::Contains, "R3"),
            Relation::new("c", "R2", RelationKind::Contains, "R4"),
            Relation::new("d", "R3", RelationKind::Contains, "R4"),
        ];
        let s = session(rels, &["R1", "R2", "R3", "R4"], "R1").unwrap();
        let p = AtomicEdit::PropagateChange(ChangeType::AddConstraintToProperty);
        let s = s.choose("D-a", p, None).unwrap().choose("D-b", p, None).unwrap();
        let ids: Vec<_> = s.pending.iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, vec!["D-c", "D-d"]);
        let s = s.choose("D-c", AtomicEdit::NoImpact, None).unwrap();
        assert!(s.is_complete());
        assert_eq!(s.status("R4"), NodeStatus::NoImpact);
        assert_eq!(s.path.cross_links.len(), 1);
        assert_eq!(s.path.cross_links[0].relation, "d");
        assert_eq!(s.notices.len(), 1);
        assert!(matches!(s.choose("D-d", p, None), Err(Error::DecisionClosed(_))));
    }

    #[test]
    fn delete_requirement_and_relation_cascades() {
        let rels = vec![
            Relation::new("a", "R1", RelationKind::Contains, "R2"),
            Relation::new("b", "R2", RelationKind::Contains, "R3"),
        ];
        let model = RequirementsModel::new(vec![req("R1"), req("R2"), req("R3")], rels);
        let change = ProposedChange::new("del", ChangeType::DeleteRequirement, Rationale::DomainChange, "R1");
        let s = Session::start(Arc::new(model), Arc::default(), change, Arc::new(default_rules())).unwrap();
        let s = s.choose("D-a", AtomicEdit::DeleteRequirementAndRelation, None).unwrap();
        assert_eq!(s.status("R2"), NodeStatus::Impacted);
        assert_eq!(
            s.path.nodes["R2"].accepted_change.as_ref().unwrap().change_type,
            ChangeType::DeleteRequirement
        );
        assert_eq!(s.pending[0].id, "D-b");
        assert_eq!(s.pending[0].alternatives.edits(), &[AtomicEdit::DeleteRequirementAndRelation]);
    }

    #[test]
    fn delete_relation_stops_propagation() {
        let rels = vec![
            Relation::new("a", "R1", RelationKind::Contains, "R2"),
            Relation::new("b", "R2", RelationKind::Contains, "R3"),
        ];
        let s = session(rels, &["R1", "R2", "R3"], "R1").unwrap();
        let s = s.choose("D-a", AtomicEdit::DeleteRelation, None).unwrap();
        assert!(s.is_complete());
        assert_eq!(s.status("R2"), NodeStatus::NoImpact);
        assert_eq!(s.status("R3"), NodeStatus::Unvisited);
    }

    #[test]
    fn replay_reproduces_state() {
        let rels = vec![
            Relation::new("a", "R1", RelationKind::Contains, "R2"),
            Relation::new("b", "R2", RelationKind::Contains, "R3"),
        ];
        let s = session(rels, &["R1", "R2", "R3"], "R1").unwrap();
        let p = AtomicEdit::PropagateChange(ChangeType::AddConstraintToProperty);
        let s = s.choose("D-a", p, None).unwrap().choose("D-b", AtomicEdit::NoImpact, None).unwrap();
        assert_eq!(s.replay().unwrap(), s);
        assert_eq!(s.replay().unwrap().to_json(), s.to_json());
        let back = Session::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
    }
}
