//! Data-driven rule tables.
//!
//! Three tables drive the engine:
//!
//! * **propagation**: for a change on `R_i` and a relation between `R_i` and
//!   `R_k`, the alternatives the engineer may pick for `R_k`;
//! * **add_requirement**: whether elements traced from an existing requirement
//!   are candidates when a new requirement `R_x` is added next to it;
//! * **traversal**: whether the impact traversal steps from `R_i` to `R_k`.
//!
//! The embedded defaults transcribe the published cells only. Every other
//! propagation cell is [`PropagationCell::Unspecified`]; traversal keys that
//! are not transcribed resolve to [`TraversalRule::DontTake`].
//!
//! Rule documents address cells as `"<ChangeType>/<RelationKind>/<out|in>"`,
//! where `out` means `R_i <kind> R_k` (or `R_x <kind> R_i` for the
//! add-requirement table) and `in` the reverse. Conflicts is symmetric and
//! always stored under `out`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::change::ChangeType;
use crate::error::{Error, Result};
use crate::model::{Direction, RelationKind};
use crate::violation::{Violation, ViolationCode};

/// One edit the engineer can choose for a related requirement.
///
/// Serialized in its `Display` form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, )]
pub enum AtomicEdit {
    NoImpact,
    /// Apply a change of the given type to the related requirement.
    PropagateChange(ChangeType),
    DeleteRelation,
    /// "Delete R_k & Delete relation", chosen as a unit.
    DeleteRequirementAndRelation,
    /// A propagated change combined with deleting the relation, chosen as a unit.
    PropagateChangeAndDeleteRelation(ChangeType),
}

impl AtomicEdit {
    /// The change the related requirement receives, if any.
    pub fn propagated_change(self) -> Option<ChangeType> {
        match self {
            AtomicEdit::PropagateChange(t) | AtomicEdit::PropagateChangeAndDeleteRelation(t) => Some(t),
            AtomicEdit::DeleteRequirementAndRelation => Some(ChangeType::DeleteRequirement),
            AtomicEdit::NoImpact | AtomicEdit::DeleteRelation => None,
        }
    }

    pub fn deletes_relation(self) -> bool {
        matches!(
            self,
            AtomicEdit::DeleteRelation
                | AtomicEdit::DeleteRequirementAndRelation
                | AtomicEdit::PropagateChangeAndDeleteRelation(_)
        )
    }
}

impl fmt::Display for AtomicEdit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomicEdit::NoImpact => f.write_str("NoImpact"),
            AtomicEdit::PropagateChange(t) => write!(f, "PropagateChange:{t}"),
            AtomicEdit::DeleteRelation => f.write_str("DeleteRelation"),
            AtomicEdit::DeleteRequirementAndRelation => f.write_str("DeleteRequirementAndRelation"),
            AtomicEdit::PropagateChangeAndDeleteRelation(t) => write!(f, "PropagateChangeAndDeleteRelation:{t}"),
        }
    }
}

impl FromStr for AtomicEdit {
    type Err = String;

    /// Parses the `Display` form, e.g. `PropagateChange:AddConstraintToProperty`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.split_once(':') {
            None => match s {
                "NoImpact" => Ok(AtomicEdit::NoImpact),
                "DeleteRelation" => Ok(AtomicEdit::DeleteRelation),
                "DeleteRequirementAndRelation" => Ok(AtomicEdit::DeleteRequirementAndRelation),
                _ => Err(format!("unknown edit `{s}`")),
            },
            Some(("PropagateChange", t)) => Ok(AtomicEdit::PropagateChange(t.parse()?)),
            Some(("PropagateChangeAndDeleteRelation", t)) => Ok(AtomicEdit::PropagateChangeAndDeleteRelation(t.parse()?)),
            Some(_) => Err(format!("unknown edit `{s}`")),
        }
    }
}

impl Serialize for AtomicEdit {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AtomicEdit {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// A disjunction of edits in table order; the engineer picks exactly one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AlternativeSet(Vec<AtomicEdit>);

impl AlternativeSet {
    pub fn new(edits: Vec<AtomicEdit>) -> Self {
        Self(edits)
    }

    pub fn edits(&self) -> &[AtomicEdit] {
        &self.0
    }

    pub fn contains(&self, edit: AtomicEdit) -> bool {
        self.0.contains(&edit)
    }

    pub fn is_only_no_impact(&self) -> bool {
        self.0 == [AtomicEdit::NoImpact]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropagationCell<'a> {
    Alternatives(&'a AlternativeSet),
    Unspecified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleKey {
    pub change: ChangeType,
    pub relation: RelationKind,
    pub direction: Direction,
}

impl RuleKey {
    pub fn new(change: ChangeType, relation: RelationKind, direction: Direction) -> Self {
        let direction = if relation.is_symmetric() { Direction::Outgoing } else { direction };
        Self { change, relation, direction }
    }

    pub fn out(change: ChangeType, relation: RelationKind) -> Self {
        Self::new(change, relation, Direction::Outgoing)
    }

    pub fn inc(change: ChangeType, relation: RelationKind) -> Self {
        Self::new(change, relation, Direction::Incoming)
    }

    pub fn address(&self) -> String {
        format!("{}/{}/{}", self.change, self.relation, self.direction.address())
    }

    pub fn parse(address: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = address.split('/').collect();
        let [change, relation, dir] = parts[..] else {
            return Err(format!("cell address `{address}` is not `<ChangeType>/<RelationKind>/<out|in>`"));
        };
        let direction = Direction::from_address(dir).ok_or_else(|| format!("direction `{dir}` is not `out` or `in`"))?;
        Ok(Self::new(change.parse()?, relation.parse()?, direction))
    }

    /// Every distinct key over the given change types, all five relation kinds
    /// and both directions, with Conflicts collapsed onto `out`.
    pub fn enumerate(changes: impl IntoIterator<Item = ChangeType>) -> Vec<RuleKey> {
        let mut keys = BTreeSet::new();
        for change in changes {
            for relation in RelationKind::ALL {
                for direction in [Direction::Outgoing, Direction::Incoming] {
                    keys.insert(RuleKey::new(change, relation, direction));
                }
            }
        }
        keys.into_iter().collect()
    }
}

impl fmt::Display for RuleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.address())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AddRequirementRule {
    NoImpactedAE,
    /// Elements traced from the existing requirement are candidates.
    TracedFromExisting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraversalRule {
    Take,
    DontTake,
}

/// Key of the add-requirement table; `direction` is relative to the new requirement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AddRequirementKey {
    pub relation: RelationKind,
    pub direction: Direction,
}

impl AddRequirementKey {
    pub fn new(relation: RelationKind, direction: Direction) -> Self {
        let direction = if relation.is_symmetric() { Direction::Outgoing } else { direction };
        Self { relation, direction }
    }

    pub fn address(&self) -> String {
        format!("{}/{}/{}", ChangeType::AddRequirement, self.relation, self.direction.address())
    }

    pub fn parse(address: &str) -> std::result::Result<Self, String> {
        let key = RuleKey::parse(address)?;
        if key.change != ChangeType::AddRequirement {
            return Err(format!("add_requirement cell `{address}` must start with `AddRequirement/`"));
        }
        Ok(Self::new(key.relation, key.direction))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    propagation: BTreeMap<RuleKey, AlternativeSet>,
    add_requirement: BTreeMap<AddRequirementKey, AddRequirementRule>,
    traversal: BTreeMap<RuleKey, TraversalRule>,
    /// Addresses of cells supplied by a user document rather than the defaults.
    user_cells: BTreeSet<String>,
}

/// The serialized form of a rule set.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleDocument {
    #[serde(default, rename = "override", skip_serializing_if = "std::ops::Not::not")]
    pub override_published: bool,
    #[serde(default)]
    pub propagation: BTreeMap<String, Vec<AtomicEdit>>,
    #[serde(default)]
    pub add_requirement: BTreeMap<String, AddRequirementRule>,
    #[serde(default)]
    pub traversal: BTreeMap<String, TraversalRule>,
}

impl RuleSet {
    pub fn propagation_cells(&self) -> impl Iterator<Item = (&RuleKey, &AlternativeSet)> {
        self.propagation.iter()
    }

    pub fn add_requirement_cells(&self) -> impl Iterator<Item = (&AddRequirementKey, &AddRequirementRule)> {
        self.add_requirement.iter()
    }

    pub fn traversal_cells(&self) -> impl Iterator<Item = (&RuleKey, &TraversalRule)> {
        self.traversal.iter()
    }

    pub fn user_cells(&self) -> &BTreeSet<String> {
        &self.user_cells
    }

    pub fn is_user_cell(&self, address: &str) -> bool {
        self.user_cells.contains(address)
    }

    pub fn propagation(&self, key: RuleKey) -> PropagationCell<'_> {
        match self.propagation.get(&RuleKey::new(key.change, key.relation, key.direction)) {
            Some(set) => PropagationCell::Alternatives(set),
            None => PropagationCell::Unspecified,
        }
    }

    /// The add-requirement rule and whether it came from a table cell (`false`
    /// means the key has no cell and `NoImpactedAE` was assumed).
    pub fn add_requirement(&self, relation: RelationKind, direction: Direction) -> (AddRequirementRule, bool) {
        match self.add_requirement.get(&AddRequirementKey::new(relation, direction)) {
            Some(rule) => (*rule, true),
            None => (AddRequirementRule::NoImpactedAE, false),
        }
    }

    pub fn traversal(&self, key: RuleKey) -> TraversalRule {
        self.traversal
            .get(&RuleKey::new(key.change, key.relation, key.direction))
            .copied()
            .unwrap_or(TraversalRule::DontTake)
    }

    pub fn to_document(&self) -> RuleDocument {
        let defaults = default_rules();
        let overrides_published = self.user_cells.iter().any(|a| defaults.has_cell(a));
        RuleDocument {
            override_published: overrides_published,
            propagation: self.propagation.iter().map(|(k, v)| (k.address(), v.edits().to_vec())).collect(),
            add_requirement: self.add_requirement.iter().map(|(k, v)| (k.address(), *v)).collect(),
            traversal: self.traversal.iter().map(|(k, v)| (k.address(), *v)).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        crate::to_canonical_json(&self.to_document())
    }

    fn has_cell(&self, address: &str) -> bool {
        let in_prop = RuleKey::parse(address).is_ok_and(|k| self.propagation.contains_key(&k) || self.traversal.contains_key(&k));
        let in_add = AddRequirementKey::parse(address).is_ok_and(|k| self.add_requirement.contains_key(&k));
        in_prop || in_add
    }
}

impl Serialize for RuleSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_document().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RuleSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = RuleDocument::deserialize(deserializer)?;
        apply_document(default_rules(), doc).map_err(serde::de::Error::custom)
    }
}

/// The published tables, transcribed cell by cell.
pub fn default_rules() -> RuleSet {
    use AtomicEdit::*;
    use ChangeType::{
        AddConstraintToProperty, AddProperty, ChangeConstraintOfProperty, ChangeProperty, DeleteConstraintOfProperty,
        DeleteProperty, DeleteRequirement,
    };
    use RelationKind::*;

    let p = PropagateChange;
    let pd = PropagateChangeAndDeleteRelation;
    let mut propagation = BTreeMap::new();
    let mut row = |change: ChangeType, cells: [Vec<AtomicEdit>; 5]| {
        for (relation, edits) in [Contains, Refines, PartiallyRefines, Requires, Conflicts].into_iter().zip(cells) {
            propagation.insert(RuleKey::out(change, relation), AlternativeSet::new(edits));
        }
    };
    row(
        DeleteRequirement,
        [
            vec![DeleteRequirementAndRelation],
            vec![DeleteRequirementAndRelation],
            vec![p(DeleteProperty)],
            vec![DeleteRelation, DeleteRequirementAndRelation],
            vec![DeleteRelation],
        ],
    );
    row(AddProperty, [vec![NoImpact], vec![p(AddProperty), DeleteRelation], vec![DeleteRelation], vec![NoImpact], vec![NoImpact]]);
    row(
        DeleteProperty,
        [
            vec![NoImpact, DeleteRelation, DeleteRequirementAndRelation, p(DeleteProperty)],
            vec![p(DeleteProperty), pd(DeleteProperty)],
            vec![p(DeleteProperty)],
            vec![NoImpact, DeleteRelation, DeleteRequirementAndRelation],
            vec![NoImpact, DeleteRelation],
        ],
    );
    row(
        AddConstraintToProperty,
        [vec![NoImpact, p(AddConstraintToProperty), DeleteRelation], vec![NoImpact], vec![NoImpact], vec![NoImpact], vec![NoImpact]],
    );
    row(
        DeleteConstraintOfProperty,
        [
            vec![NoImpact, p(DeleteConstraintOfProperty)],
            vec![NoImpact, DeleteRelation, p(DeleteConstraintOfProperty), pd(DeleteConstraintOfProperty)],
            vec![NoImpact, DeleteRelation, p(DeleteConstraintOfProperty), pd(DeleteConstraintOfProperty)],
            vec![NoImpact, DeleteRelation, DeleteRequirementAndRelation],
            vec![NoImpact, DeleteRelation],
        ],
    );

    use AddRequirementRule::{NoImpactedAE, TracedFromExisting};
    let mut add_requirement = BTreeMap::new();
    // columns "R_i <kind> R_x": incoming to the new requirement
    for (relation, rule) in
        [(Contains, NoImpactedAE), (Refines, NoImpactedAE), (PartiallyRefines, NoImpactedAE), (Requires, TracedFromExisting)]
    {
        add_requirement.insert(AddRequirementKey::new(relation, Direction::Incoming), rule);
    }
    // columns "R_x <kind> R_i"
    for (relation, rule) in [
        (Contains, NoImpactedAE),
        (Refines, TracedFromExisting),
        (PartiallyRefines, TracedFromExisting),
        (Requires, TracedFromExisting),
    ] {
        add_requirement.insert(AddRequirementKey::new(relation, Direction::Outgoing), rule);
    }

    use TraversalRule::{DontTake as D, Take as T};
    let mut traversal = BTreeMap::new();
    let columns = [
        RuleKey::out as fn(ChangeType, RelationKind) -> RuleKey,
        RuleKey::out,
        RuleKey::out,
        RuleKey::inc,
        RuleKey::inc,
        RuleKey::inc,
    ];
    let kinds = [Contains, Refines, PartiallyRefines, Contains, Refines, PartiallyRefines];
    let update_pattern = [T, D, D, D, T, T];
    for (change, pattern) in [
        (DeleteRequirement, [D, D, D, D, T, D]),
        (DeleteProperty, update_pattern),
        (ChangeProperty, update_pattern),
        (AddConstraintToProperty, update_pattern),
        (DeleteConstraintOfProperty, update_pattern),
        (ChangeConstraintOfProperty, update_pattern),
    ] {
        for ((make, kind), rule) in columns.iter().zip(kinds).zip(pattern) {
            traversal.insert(make(change, kind), rule);
        }
    }

    RuleSet { propagation, add_requirement, traversal, user_cells: BTreeSet::new() }
}

/// Parses a rule document and layers it over the defaults.
pub fn load_rules(document: &str) -> Result<RuleSet> {
    if document.trim().is_empty() {
        return Ok(default_rules());
    }
    let doc: RuleDocument =
        serde_json::from_str(document).map_err(|e| Error::MalformedRuleDocument(e.to_string()))?;
    apply_document(default_rules(), doc)
}

fn apply_document(mut rules: RuleSet, doc: RuleDocument) -> Result<RuleSet> {
    let allow = doc.override_published;
    for (address, edits) in doc.propagation {
        let key = RuleKey::parse(&address).map_err(Error::MalformedRuleDocument)?;
        let set = AlternativeSet::new(edits);
        place(&mut rules.propagation, &mut rules.user_cells, key, key.address(), set, allow)?;
    }
    for (address, rule) in doc.add_requirement {
        let key = AddRequirementKey::parse(&address).map_err(Error::MalformedRuleDocument)?;
        place(&mut rules.add_requirement, &mut rules.user_cells, key, key.address(), rule, allow)?;
    }
    for (address, rule) in doc.traversal {
        let key = RuleKey::parse(&address).map_err(Error::MalformedRuleDocument)?;
        place(&mut rules.traversal, &mut rules.user_cells, key, key.address(), rule, allow)?;
    }
    Ok(rules)
}

fn place<K: Ord, V: PartialEq>(
    table: &mut BTreeMap<K, V>,
    user_cells: &mut BTreeSet<String>,
    key: K,
    address: String,
    value: V,
    allow_override: bool,
) -> Result<()> {
    match table.get(&key) {
        Some(existing) if *existing == value => Ok(()),
        Some(_) if !allow_override && !user_cells.contains(&address) => Err(Error::ConflictingCell(address)),
        _ => {
            table.insert(key, value);
            user_cells.insert(address);
            Ok(())
        }
    }
}

pub fn lookup_alternatives(rules: &RuleSet, change: ChangeType, relation: RelationKind, direction: Direction) -> PropagationCell<'_> {
    rules.propagation(RuleKey::new(change, relation, direction))
}

/// Change types whose propagation cells the session engine may consult.
pub fn propagatable_change_types() -> impl Iterator<Item = ChangeType> {
    ChangeType::ALL.into_iter().filter(|t| t.is_propagatable())
}

pub fn validate_rules(rules: &RuleSet) -> Vec<Violation> {
    let mut out = Vec::new();
    for key in RuleKey::enumerate(propagatable_change_types()) {
        if !rules.propagation.contains_key(&key) {
            out.push(Violation::notice(
                ViolationCode::UnspecifiedCell,
                key.address(),
                "no published rule; the session asks for a manual decision",
            ));
        }
    }
    for (key, set) in &rules.propagation {
        if set.is_empty() {
            out.push(Violation::error(ViolationCode::EmptyCell, key.address(), "alternative set is empty"));
        }
        let mut seen = BTreeSet::new();
        if let Some(dup) = set.edits().iter().find(|e| !seen.insert(**e)) {
            out.push(Violation::error(ViolationCode::DuplicateEdit, key.address(), format!("`{dup}` listed twice")));
        }
    }
    let published = default_rules();
    for (key, rule) in &rules.traversal {
        if *rule == TraversalRule::Take && !published.traversal.contains_key(key) && rules.is_user_cell(&key.address()) {
            out.push(Violation::notice(
                ViolationCode::ForcedTraversal,
                key.address(),
                "traversal forced to Take for a relation outside the published table",
            ));
        }
    }
    out
}
