//! Requirements change taxonomy and the structural application of a change
//! to a requirements model snapshot.
//!
//! Adding a constraint makes a requirement more restrictive, so the changed
//! requirement refines the original one. That claim is semantic and is not
//! checked here; only the structural post-conditions are enforced.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_requirements_model, Constraint, Property, Relation, RelationKind, Requirement, RequirementsModel};
use crate::violation::{Violation, ViolationCode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChangeType {
    AddRelation,
    DeleteRelation,
    UpdateRelation,
    AddRequirement,
    DeleteRequirement,
    AddProperty,
    AddConstraintToProperty,
    ChangeProperty,
    ChangeConstraintOfProperty,
    DeleteProperty,
    DeleteConstraintOfProperty,
}

impl ChangeType {
    pub const ALL: [ChangeType; 11] = [
        ChangeType::AddRelation,
        ChangeType::DeleteRelation,
        ChangeType::UpdateRelation,
        ChangeType::AddRequirement,
        ChangeType::DeleteRequirement,
        ChangeType::AddProperty,
        ChangeType::AddConstraintToProperty,
        ChangeType::ChangeProperty,
        ChangeType::ChangeConstraintOfProperty,
        ChangeType::DeleteProperty,
        ChangeType::DeleteConstraintOfProperty,
    ];

    pub fn is_relation_change(self) -> bool {
        matches!(self, ChangeType::AddRelation | ChangeType::DeleteRelation | ChangeType::UpdateRelation)
    }

    /// The "Update Requirement" subtypes.
    pub fn is_requirement_update(self) -> bool {
        matches!(
            self,
            ChangeType::AddProperty
                | ChangeType::AddConstraintToProperty
                | ChangeType::ChangeProperty
                | ChangeType::ChangeConstraintOfProperty
                | ChangeType::DeleteProperty
                | ChangeType::DeleteConstraintOfProperty
        )
    }

    /// Change types that travel from one requirement to another over relations.
    pub fn is_propagatable(self) -> bool {
        self == ChangeType::DeleteRequirement || self.is_requirement_update()
    }

    pub fn targets_relation(self) -> bool {
        self.is_relation_change()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ChangeType::AddRelation => "AddRelation",
            ChangeType::DeleteRelation => "DeleteRelation",
            ChangeType::UpdateRelation => "UpdateRelation",
            ChangeType::AddRequirement => "AddRequirement",
            ChangeType::DeleteRequirement => "DeleteRequirement",
            ChangeType::AddProperty => "AddProperty",
            ChangeType::AddConstraintToProperty => "AddConstraintToProperty",
            ChangeType::ChangeProperty => "ChangeProperty",
            ChangeType::ChangeConstraintOfProperty => "ChangeConstraintOfProperty",
            ChangeType::DeleteProperty => "DeleteProperty",
            ChangeType::DeleteConstraintOfProperty => "DeleteConstraintOfProperty",
        }
    }
}

impl fmt::Display for ChangeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChangeType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        ChangeType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown change type `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rationale {
    /// Modifies the overall system properties.
    DomainChange,
    /// Restructures the model without modifying system properties.
    Refactoring,
}

/// Type-specific data carried by a change.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChangePayload {
    /// AddRelation.
    Relation { relation: Relation },
    /// UpdateRelation: the replacement kind.
    RelationKind { relation_kind: RelationKind },
    /// AddRequirement: the requirement and the relations it is declared with.
    Requirement {
        requirement: Requirement,
        #[serde(default)]
        relations: Vec<Relation>,
    },
    /// AddProperty.
    Property { property: Property },
    /// AddConstraintToProperty.
    Constraint { property_id: String, constraint: Constraint },
    /// ChangeProperty.
    PropertyText { property_id: String, text: String },
    /// ChangeConstraintOfProperty.
    ConstraintText { property_id: String, constraint_id: String, text: String },
    /// DeleteProperty.
    PropertyRef { property_id: String },
    /// DeleteConstraintOfProperty.
    ConstraintRef { property_id: String, constraint_id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProposedChange {
    pub id: String,
    #[serde(rename = "type")]
    pub change_type: ChangeType,
    pub rationale: Rationale,
    /// Requirement id, or relation id for the relation change types.
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<ChangePayload>,
    #[serde(default)]
    pub description: String,
}

impl ProposedChange {
    pub fn new(id: impl Into<String>, change_type: ChangeType, rationale: Rationale, target: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            change_type,
            rationale,
            target: target.into(),
            payload: None,
            description: String::new(),
        }
    }

    pub fn with_payload(mut self, payload: ChangePayload) -> Self {
        self.payload = Some(payload);
        self
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    pub fn add_constraint(
        id: impl Into<String>,
        target: impl Into<String>,
        property_id: impl Into<String>,
        constraint: Constraint,
    ) -> Self {
        Self::new(id, ChangeType::AddConstraintToProperty, Rationale::DomainChange, target).with_payload(
            ChangePayload::Constraint { property_id: property_id.into(), constraint },
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeLogEntry {
    pub change: ProposedChange,
    pub applied_at: u64,
}

/// Changes applied in order, each stamped with a strictly increasing sequence number.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeLog {
    entries: Vec<ChangeLogEntry>,
}

impl ChangeLog {
    pub fn entries(&self) -> &[ChangeLogEntry] {
        &self.entries
    }

    /// Applies `change` to `model` and records it on success.
    pub fn apply(&mut self, model: &RequirementsModel, change: ProposedChange) -> Result<RequirementsModel> {
        let next = apply_change(model, &change)?;
        let applied_at = self.entries.last().map_or(1, |e| e.applied_at + 1);
        self.entries.push(ChangeLogEntry { change, applied_at });
        Ok(next)
    }
}

fn mismatch(change: &ProposedChange, expected: &str) -> Violation {
    Violation::error(
        ViolationCode::PayloadMismatch,
        change.id.clone(),
        format!("{} expects {expected}", change.change_type),
    )
}

/// Checks that the change's targets exist and its payload fits its type.
///
/// A change that passes the shape checks is also tentatively applied; any
/// structural error it would introduce into a clean model is reported as
/// `IntroducesViolation`.
pub fn check_change_wellformed(model: &RequirementsModel, change: &ProposedChange) -> Vec<Violation> {
    let mut out = check_shape(model, change);
    if out.is_empty() {
        let before: Vec<Violation> = validate_requirements_model(model).into_iter().filter(Violation::is_error).collect();
        let after = validate_requirements_model(&edit(model, change));
        for v in after.into_iter().filter(|v| v.is_error() && !before.contains(v)) {
            out.push(Violation::error(
                ViolationCode::IntroducesViolation,
                change.id.clone(),
                format!("applying the change would introduce: {v}"),
            ));
        }
    }
    out
}

fn check_shape(model: &RequirementsModel, change: &ProposedChange) -> Vec<Violation> {
    let mut out = Vec::new();
    let ty = change.change_type;

    if ty.targets_relation() {
        if ty == ChangeType::AddRelation {
            match &change.payload {
                Some(ChangePayload::Relation { relation }) => {
                    if relation.id != change.target {
                        out.push(mismatch(change, "a relation whose id equals the change target"));
                    }
                    if model.relation(&relation.id).is_some() {
                        out.push(Violation::error(
                            ViolationCode::DuplicateRelationId,
                            relation.id.clone(),
                            "relation id already in use",
                        ));
                    }
                    for end in [&relation.source, &relation.target] {
                        if !model.contains_requirement(end) {
                            out.push(Violation::error(
                                ViolationCode::UnknownRequirement,
                                end.clone(),
                                "relation endpoint does not exist",
                            ));
                        }
                    }
                }
                _ => out.push(mismatch(change, "a `relation` payload")),
            }
            return out;
        }
        if model.relation(&change.target).is_none() {
            out.push(Violation::error(ViolationCode::UnknownRelation, change.target.clone(), "relation does not exist"));
        }
        match (ty, &change.payload) {
            (ChangeType::DeleteRelation, None) | (ChangeType::UpdateRelation, Some(ChangePayload::RelationKind { .. })) => {}
            (ChangeType::DeleteRelation, Some(_)) => out.push(mismatch(change, "no payload")),
            _ => out.push(mismatch(change, "a `relation_kind` payload")),
        }
        return out;
    }

    if ty == ChangeType::AddRequirement {
        match &change.payload {
            Some(ChangePayload::Requirement { requirement, relations }) => {
                if requirement.id != change.target {
                    out.push(mismatch(change, "a requirement whose id equals the change target"));
                }
                if model.contains_requirement(&requirement.id) {
                    out.push(Violation::error(
                        ViolationCode::DuplicateRequirementId,
                        requirement.id.clone(),
                        "requirement id already in use",
                    ));
                }
                for rel in relations {
                    let Some(other) = rel.other_end(&requirement.id) else {
                        out.push(Violation::error(
                            ViolationCode::PayloadMismatch,
                            rel.id.clone(),
                            format!("declared relation does not involve `{}`", requirement.id),
                        ));
                        continue;
                    };
                    if !model.contains_requirement(other) {
                        out.push(Violation::error(
                            ViolationCode::UnknownRequirement,
                            other.to_string(),
                            "relation endpoint does not exist",
                        ));
                    }
                    if model.relation(&rel.id).is_some() {
                        out.push(Violation::error(
                            ViolationCode::DuplicateRelationId,
                            rel.id.clone(),
                            "relation id already in use",
                        ));
                    }
                }
            }
            _ => out.push(mismatch(change, "a `requirement` payload")),
        }
        return out;
    }

    let Some(req) = model.requirement(&change.target) else {
        out.push(Violation::error(ViolationCode::UnknownRequirement, change.target.clone(), "requirement does not exist"));
        return out;
    };
    let unknown_property = |pid: &str| {
        Violation::error(ViolationCode::UnknownProperty, format!("{}/{pid}", req.id), "property does not exist")
    };
    let unknown_constraint = |pid: &str, cid: &str| {
        Violation::error(ViolationCode::UnknownConstraint, format!("{}/{pid}/{cid}", req.id), "constraint does not exist")
    };
    match (ty, &change.payload) {
        (ChangeType::DeleteRequirement, None) => {}
        (ChangeType::DeleteRequirement, Some(_)) => out.push(mismatch(change, "no payload")),
        (ChangeType::AddProperty, Some(ChangePayload::Property { property })) => {
            if req.property(&property.id).is_some() {
                out.push(Violation::error(
                    ViolationCode::DuplicatePropertyId,
                    format!("{}/{}", req.id, property.id),
                    "property id already in use",
                ));
            }
        }
        (ChangeType::AddConstraintToProperty, Some(ChangePayload::Constraint { property_id, constraint })) => {
            match req.property(property_id) {
                None => out.push(unknown_property(property_id)),
                Some(p) if p.constraint(&constraint.id).is_some() => out.push(Violation::error(
                    ViolationCode::DuplicateConstraintId,
                    format!("{}/{property_id}/{}", req.id, constraint.id),
                    "constraint id already in use",
                )),
                Some(_) => {}
            }
        }
        (ChangeType::ChangeProperty, Some(ChangePayload::PropertyText { property_id, .. })) => {
            if req.property(property_id).is_none() {
                out.push(unknown_property(property_id));
            }
        }
        (ChangeType::DeleteProperty, Some(ChangePayload::PropertyRef { property_id })) => {
            if req.property(property_id).is_none() {
                out.push(unknown_property(property_id));
            } else if req.properties.len() == 1 {
                out.push(Violation::error(
                    ViolationCode::LastProperty,
                    format!("{}/{property_id}", req.id),
                    "deleting the only property leaves an empty requirement; delete the requirement instead",
                ));
            }
        }
        (
            ChangeType::ChangeConstraintOfProperty,
            Some(ChangePayload::ConstraintText { property_id, constraint_id, .. }),
        )
        | (ChangeType::DeleteConstraintOfProperty, Some(ChangePayload::ConstraintRef { property_id, constraint_id })) => {
            match req.property(property_id) {
                None => out.push(unknown_property(property_id)),
                Some(p) if p.constraint(constraint_id).is_none() => out.push(unknown_constraint(property_id, constraint_id)),
                Some(_) => {}
            }
        }
        (ChangeType::AddProperty, _) => out.push(mismatch(change, "a `property` payload")),
        (ChangeType::AddConstraintToProperty, _) => out.push(mismatch(change, "a `constraint` payload")),
        (ChangeType::ChangeProperty, _) => out.push(mismatch(change, "a `property_text` payload")),
        (ChangeType::DeleteProperty, _) => out.push(mismatch(change, "a `property_ref` payload")),
        (ChangeType::ChangeConstraintOfProperty, _) => out.push(mismatch(change, "a `constraint_text` payload")),
        (ChangeType::DeleteConstraintOfProperty, _) => out.push(mismatch(change, "a `constraint_ref` payload")),
        _ => unreachable!("relation and add-requirement changes handled above"),
    }
    out
}

/// Produces the model after `change`. The input snapshot is left untouched.
pub fn apply_change(model: &RequirementsModel, change: &ProposedChange) -> Result<RequirementsModel> {
    let violations = check_change_wellformed(model, change);
    if !violations.is_empty() {
        return Err(Error::IllFormedChange(violations));
    }
    Ok(edit(model, change))
}

/// Performs the edit assuming the shape checks passed.
fn edit(model: &RequirementsModel, change: &ProposedChange) -> RequirementsModel {
    let (mut reqs, mut rels) = model.clone().into_parts();
    let target = change.target.as_str();
    match (change.change_type, &change.payload) {
        (ChangeType::AddRelation, Some(ChangePayload::Relation { relation })) => rels.push(relation.clone()),
        (ChangeType::DeleteRelation, _) => rels.retain(|r| r.id != target),
        (ChangeType::UpdateRelation, Some(ChangePayload::RelationKind { relation_kind })) => {
            if let Some(r) = rels.iter_mut().find(|r| r.id == target) {
                r.kind = *relation_kind;
            }
        }
        (ChangeType::AddRequirement, Some(ChangePayload::Requirement { requirement, relations })) => {
            reqs.push(requirement.clone());
            rels.extend(relations.iter().cloned());
        }
        (ChangeType::DeleteRequirement, _) => {
            reqs.retain(|r| r.id != target);
            rels.retain(|r| r.source != target && r.target != target);
        }
        (ty, payload) => {
            let Some(req) = reqs.iter_mut().find(|r| r.id == target) else {
                return RequirementsModel::new(reqs, rels);
            };
            match (ty, payload) {
                (ChangeType::AddProperty, Some(ChangePayload::Property { property })) => req.properties.push(property.clone()),
                (ChangeType::AddConstraintToProperty, Some(ChangePayload::Constraint { property_id, constraint })) => {
                    if let Some(p) = req.property_mut(property_id) {
                        p.constraints.push(constraint.clone());
                    }
                }
                (ChangeType::ChangeProperty, Some(ChangePayload::PropertyText { property_id, text })) => {
                    if let Some(p) = req.property_mut(property_id) {
                        p.text = text.clone();
                    }
                }
                (ChangeType::DeleteProperty, Some(ChangePayload::PropertyRef { property_id })) => {
                    req.properties.retain(|p| &p.id != property_id);
                }
                (
                    ChangeType::ChangeConstraintOfProperty,
                    Some(ChangePayload::ConstraintText { property_id, constraint_id, text }),
                ) => {
                    if let Some(c) = req
                        .property_mut(property_id)
                        .and_then(|p| p.constraints.iter_mut().find(|c| &c.id == constraint_id))
                    {
                        c.text = text.clone();
                    }
                }
                (
                    ChangeType::DeleteConstraintOfProperty,
                    Some(ChangePayload::ConstraintRef { property_id, constraint_id }),
                ) => {
                    if let Some(p) = req.property_mut(property_id) {
                        p.constraints.retain(|c| &c.id != constraint_id);
                    }
                }
                _ => {}
            }
        }
    }
    RequirementsModel::new(reqs, rels)
}
