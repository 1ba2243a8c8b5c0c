//! Requirements, their properties and constraints, and the typed relations
//! between requirements.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::violation::{Violation, ViolationCode};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Property {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
}

impl Property {
    pub fn constraint(&self, id: &str) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requirement {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub properties: Vec<Property>,
}

impl Requirement {
    pub fn property(&self, id: &str) -> Option<&Property> {
        self.properties.iter().find(|p| p.id == id)
    }

    pub fn property_mut(&mut self, id: &str) -> Option<&mut Property> {
        self.properties.iter_mut().find(|p| p.id == id)
    }

    pub fn constraint_count(&self) -> usize {
        self.properties.iter().map(|p| p.constraints.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationKind {
    Contains,
    Refines,
    PartiallyRefines,
    Requires,
    Conflicts,
}

impl RelationKind {
    pub const ALL: [RelationKind; 5] = [
        RelationKind::Contains,
        RelationKind::Refines,
        RelationKind::PartiallyRefines,
        RelationKind::Requires,
        RelationKind::Conflicts,
    ];

    /// Part-whole and derivation relations; these must stay acyclic.
    pub fn is_hierarchical(self) -> bool {
        matches!(self, RelationKind::Contains | RelationKind::Refines | RelationKind::PartiallyRefines)
    }

    pub fn is_symmetric(self) -> bool {
        self == RelationKind::Conflicts
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::Contains => "Contains",
            RelationKind::Refines => "Refines",
            RelationKind::PartiallyRefines => "PartiallyRefines",
            RelationKind::Requires => "Requires",
            RelationKind::Conflicts => "Conflicts",
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        RelationKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown relation kind `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Origin {
    #[default]
    Given,
    Inferred,
}

/// Orientation of a relation as seen from one of its endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    Outgoing,
    Incoming,
}

impl Direction {
    pub fn address(self) -> &'static str {
        match self {
            Direction::Outgoing => "out",
            Direction::Incoming => "in",
        }
    }

    pub fn from_address(s: &str) -> Option<Self> {
        match s {
            "out" => Some(Direction::Outgoing),
            "in" => Some(Direction::Incoming),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub id: String,
    pub source: String,
    pub target: String,
    pub kind: RelationKind,
    #[serde(default)]
    pub origin: Origin,
}

impl Relation {
    pub fn new(id: impl Into<String>, source: impl Into<String>, kind: RelationKind, target: impl Into<String>) -> Self {
        Self { id: id.into(), source: source.into(), target: target.into(), kind, origin: Origin::Given }
    }

    /// The endpoint opposite to `req`, if `req` is an endpoint at all.
    pub fn other_end(&self, req: &str) -> Option<&str> {
        if self.source == req {
            Some(&self.target)
        } else if self.target == req {
            Some(&self.source)
        } else {
            None
        }
    }

    pub fn direction_from(&self, req: &str) -> Option<Direction> {
        if self.source == req {
            Some(Direction::Outgoing)
        } else if self.target == req {
            Some(Direction::Incoming)
        } else {
            None
        }
    }

    fn pair_key(&self) -> (String, String, RelationKind) {
        if self.kind.is_symmetric() && self.target < self.source {
            (self.target.clone(), self.source.clone(), self.kind)
        } else {
            (self.source.clone(), self.target.clone(), self.kind)
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.source, self.kind, self.target)
    }
}

/// An immutable snapshot of requirements and relations, both kept sorted by id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "RawRequirementsModel")]
pub struct RequirementsModel {
    requirements: Vec<Requirement>,
    relations: Vec<Relation>,
}

#[derive(Deserialize)]
struct RawRequirementsModel {
    #[serde(default)]
    requirements: Vec<Requirement>,
    #[serde(default)]
    relations: Vec<Relation>,
}

impl From<RawRequirementsModel> for RequirementsModel {
    fn from(raw: RawRequirementsModel) -> Self {
        RequirementsModel::new(raw.requirements, raw.relations)
    }
}

impl RequirementsModel {
    pub fn new(mut requirements: Vec<Requirement>, mut relations: Vec<Relation>) -> Self {
        requirements.sort_by(|a, b| a.id.cmp(&b.id));
        relations.sort_by(|a, b| a.id.cmp(&b.id));
        Self { requirements, relations }
    }

    /// Parses a `requirements.json` document and normalizes symmetric relations.
    pub fn from_json(text: &str) -> Result<(Self, Vec<Violation>)> {
        let model: RequirementsModel = serde_json::from_str(text)?;
        Ok(model.normalized())
    }

    pub fn to_json(&self) -> String {
        crate::to_canonical_json(self)
    }

    /// Collapses `A Conflicts B` / `B Conflicts A` pairs into the relation with
    /// the smaller id, reporting each dropped relation.
    pub fn normalized(self) -> (Self, Vec<Violation>) {
        let mut seen: BTreeMap<(String, String), String> = BTreeMap::new();
        let mut notices = Vec::new();
        let mut kept = Vec::with_capacity(self.relations.len());
        for rel in self.relations {
            if rel.kind.is_symmetric() && rel.source != rel.target {
                let reversed = (rel.target.clone(), rel.source.clone());
                if let Some(first) = seen.get(&reversed) {
                    notices.push(Violation::notice(
                        ViolationCode::Normalization,
                        rel.id.clone(),
                        format!("`{rel}` duplicates symmetric relation `{first}`; dropped"),
                    ));
                    continue;
                }
                seen.insert((rel.source.clone(), rel.target.clone()), rel.id.clone());
            }
            kept.push(rel);
        }
        (Self { requirements: self.requirements, relations: kept }, notices)
    }

    pub fn requirements(&self) -> &[Requirement] {
        &self.requirements
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn requirement(&self, id: &str) -> Option<&Requirement> {
        self.requirements.iter().find(|r| r.id == id)
    }

    pub fn relation(&self, id: &str) -> Option<&Relation> {
        self.relations.iter().find(|r| r.id == id)
    }

    pub fn contains_requirement(&self, id: &str) -> bool {
        self.requirement(id).is_some()
    }

    pub fn into_parts(self) -> (Vec<Requirement>, Vec<Relation>) {
        (self.requirements, self.relations)
    }

    /// Every relation incident to `req`, ordered by relation id.
    pub fn neighbors(&self, req: &str) -> Result<Vec<(&Relation, Direction)>> {
        if !self.contains_requirement(req) {
            return Err(Error::UnknownRequirement(req.to_string()));
        }
        Ok(self
            .relations
            .iter()
            .filter_map(|rel| rel.direction_from(req).map(|dir| (rel, dir)))
            .collect())
    }
}

pub fn neighbors<'m>(model: &'m RequirementsModel, req: &str) -> Result<Vec<(&'m Relation, Direction)>> {
    model.neighbors(req)
}

pub fn validate_requirements_model(model: &RequirementsModel) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut ids = HashSet::new();
    for req in model.requirements() {
        if !ids.insert(req.id.as_str()) {
            out.push(Violation::error(
                ViolationCode::DuplicateRequirementId,
                req.id.clone(),
                "requirement id used more than once",
            ));
        }
        check_requirement(req, &mut out);
    }

    let mut rel_ids = HashSet::new();
    let mut triples: BTreeMap<(String, String, RelationKind), &str> = BTreeMap::new();
    let mut hierarchy: DiGraphMap<&str, ()> = DiGraphMap::new();
    let mut dependencies: DiGraphMap<&str, ()> = DiGraphMap::new();
    for rel in model.relations() {
        if !rel_ids.insert(rel.id.as_str()) {
            out.push(Violation::error(
                ViolationCode::DuplicateRelationId,
                rel.id.clone(),
                "relation id used more than once",
            ));
        }
        let mut sound = true;
        if rel.source == rel.target {
            sound = false;
            out.push(Violation::error(
                ViolationCode::SelfRelation,
                rel.source.clone(),
                format!("relation `{}` relates `{}` to itself", rel.id, rel.source),
            ));
        }
        for end in [&rel.source, &rel.target] {
            if !ids.contains(end.as_str()) {
                sound = false;
                out.push(Violation::error(
                    ViolationCode::DanglingEndpoint,
                    rel.id.clone(),
                    format!("relation `{}` references missing requirement `{end}`", rel.id),
                ));
            }
        }
        if let Some(first) = triples.get(&rel.pair_key()) {
            out.push(Violation::error(
                ViolationCode::DuplicateRelation,
                rel.id.clone(),
                format!("`{rel}` duplicates relation `{first}`"),
            ));
        } else {
            triples.insert(rel.pair_key(), &rel.id);
        }
        if !sound {
            continue;
        }
        if rel.kind.is_hierarchical() {
            hierarchy.add_edge(&rel.source, &rel.target, ());
        } else if rel.kind == RelationKind::Requires {
            dependencies.add_edge(&rel.source, &rel.target, ());
        }
    }

    for component in cycles(&hierarchy) {
        out.push(Violation::error(
            ViolationCode::RelationCycle,
            format!("{{{}}}", component.join(",")),
            "cycle through Contains/Refines/PartiallyRefines relations",
        ));
    }
    for component in cycles(&dependencies) {
        out.push(Violation::notice(
            ViolationCode::DependencyCycle,
            format!("{{{}}}", component.join(",")),
            "cycle through Requires relations",
        ));
    }
    out
}

fn check_requirement(req: &Requirement, out: &mut Vec<Violation>) {
    if req.text.trim().is_empty() {
        out.push(Violation::error(ViolationCode::EmptyText, req.id.clone(), "requirement text is empty"));
    }
    if req.properties.is_empty() {
        out.push(Violation::error(ViolationCode::NoProperties, req.id.clone(), "requirement describes no property"));
    }
    let mut prop_ids = HashSet::new();
    for prop in &req.properties {
        let loc = format!("{}/{}", req.id, prop.id);
        if !prop_ids.insert(prop.id.as_str()) {
            out.push(Violation::error(ViolationCode::DuplicatePropertyId, loc.clone(), "property id used more than once"));
        }
        if prop.text.trim().is_empty() {
            out.push(Violation::error(ViolationCode::EmptyText, loc.clone(), "property text is empty"));
        }
        let mut constraint_ids = HashSet::new();
        for c in &prop.constraints {
            let cloc = format!("{loc}/{}", c.id);
            if !constraint_ids.insert(c.id.as_str()) {
                out.push(Violation::error(
                    ViolationCode::DuplicateConstraintId,
                    cloc.clone(),
                    "constraint id used more than once",
                ));
            }
            if c.text.trim().is_empty() {
                out.push(Violation::error(ViolationCode::EmptyText, cloc, "constraint text is empty"));
            }
        }
    }
}

/// Strongly connected components with more than one member, each sorted.
fn cycles(graph: &DiGraphMap<&str, ()>) -> Vec<Vec<String>> {
    let mut found: BTreeSet<Vec<String>> = BTreeSet::new();
    for scc in tarjan_scc(graph) {
        if scc.len() > 1 {
            let mut ids: Vec<String> = scc.into_iter().map(str::to_string).collect();
            ids.sort();
            found.insert(ids);
        }
    }
    found.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(id: &str) -> Requirement {
        Requirement {
            id: id.into(),
            text: format!("The system shall do {id}."),
            properties: vec![Property { id: "P1".into(), text: format!("do {id}"), constraints: vec![] }],
        }
    }

    #[test]
    fn self_relation_is_reported_at_the_requirement() {
        let m = RequirementsModel::new(vec![req("R1")], vec![Relation::new("x", "R1", RelationKind::Refines, "R1")]);
        let v = validate_requirements_model(&m);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, ViolationCode::SelfRelation);
        assert_eq!(v[0].location, "R1");
    }

    #[test]
    fn contains_cycle_of_length_two() {
        let m = RequirementsModel::new(
            vec![req("R1"), req("R2")],
            vec![
                Relation::new("a", "R1", RelationKind::Contains, "R2"),
                Relation::new("b", "R2", RelationKind::Contains, "R1"),
            ],
        );
        let v = validate_requirements_model(&m);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, ViolationCode::RelationCycle);
        assert_eq!(v[0].location, "{R1,R2}");
    }

    #[test]
    fn requires_cycle_is_only_a_notice() {
        let m = RequirementsModel::new(
            vec![req("R1"), req("R2")],
            vec![
                Relation::new("a", "R1", RelationKind::Requires, "R2"),
                Relation::new("b", "R2", RelationKind::Requires, "R1"),
            ],
        );
        let v = validate_requirements_model(&m);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, ViolationCode::DependencyCycle);
        assert!(!v[0].is_error());
    }

    #[test]
    fn dangling_and_duplicates() {
        let m = RequirementsModel::new(
            vec![req("R1"), req("R1"), req("R2")],
            vec![
                Relation::new("a", "R1", RelationKind::Requires, "R2"),
                Relation::new("b", "R1", RelationKind::Requires, "R2"),
                Relation::new("c", "R1", RelationKind::Requires, "R9"),
            ],
        );
        let codes: Vec<_> = validate_requirements_model(&m).into_iter().map(|v| v.code).collect();
        assert_eq!(
            codes,
            vec![ViolationCode::DuplicateRequirementId, ViolationCode::DuplicateRelation, ViolationCode::DanglingEndpoint]
        );
    }

    #[test]
    fn empty_texts_and_missing_properties() {
        let mut r = req("R1");
        r.text = " ".into();
        r.properties[0].constraints.push(Constraint { id: "C1".into(), text: String::new() });
        let bare = Requirement { id: "R2".into(), text: "bare".into(), properties: vec![] };
        let v = validate_requirements_model(&RequirementsModel::new(vec![r, bare], vec![]));
        let locs: Vec<_> = v.iter().map(|v| (v.code, v.location.as_str())).collect();
        assert_eq!(
            locs,
            vec![
                (ViolationCode::EmptyText, "R1"),
                (ViolationCode::EmptyText, "R1/P1/C1"),
                (ViolationCode::NoProperties, "R2"),
            ]
        );
    }

    #[test]
    fn reversed_conflicts_pair_is_normalized_once() {
        let m = RequirementsModel::new(
            vec![req("A"), req("B")],
            vec![
                Relation::new("c1", "A", RelationKind::Conflicts, "B"),
                Relation::new("c2", "B", RelationKind::Conflicts, "A"),
            ],
        );
        let (m, notices) = m.normalized();
        assert_eq!(m.relations().len(), 1);
        assert_eq!(m.relations()[0].id, "c1");
        assert_eq!(notices.len(), 1);
        assert_eq!(notices[0].code, ViolationCode::Normalization);
        assert!(validate_requirements_model(&m).is_empty());
    }

    #[test]
    fn unnormalized_conflicts_pair_is_a_duplicate() {
        let m = RequirementsModel::new(
            vec![req("A"), req("B")],
            vec![
                Relation::new("c1", "A", RelationKind::Conflicts, "B"),
                Relation::new("c2", "B", RelationKind::Conflicts, "A"),
            ],
        );
        let v = validate_requirements_model(&m);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, ViolationCode::DuplicateRelation);
    }

    #[test]
    fn neighbors_of_isolated_and_unknown() {
        let m = RequirementsModel::new(vec![req("R1")], vec![]);
        assert!(m.neighbors("R1").unwrap().is_empty());
        assert!(matches!(m.neighbors("R2"), Err(Error::UnknownRequirement(id)) if id == "R2"));
    }

    #[test]
    fn neighbors_are_ordered_by_relation_id() {
        let m = RequirementsModel::new(
            vec![req("R1"), req("R2"), req("R5")],
            vec![
                Relation::new("r2", "R5", RelationKind::Refines, "R2"),
                Relation::new("r1", "R1", RelationKind::Contains, "R2"),
            ],
        );
        let n: Vec<_> = m.neighbors("R2").unwrap().into_iter().map(|(r, d)| (r.id.as_str(), d)).collect();
        assert_eq!(n, vec![("r1", Direction::Incoming), ("r2", Direction::Incoming)]);
    }

    #[test]
    fn inferred_origin_loads() {
        let text = r#"{"requirements":[],"relations":[{"id":"a","source":"X","target":"Y","kind":"Requires","origin":"Inferred"}]}"#;
        let (m, _) = RequirementsModel::from_json(text).unwrap();
        assert_eq!(m.relations()[0].origin, Origin::Inferred);
    }
}
