use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::violation::{Violation, ViolationCode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortDirection {
    In,
    Out,
    InOut,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Connection {
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchElement {
    pub id: String,
    pub name: String,
    /// Free-form category label such as `system`, `process`, `port`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    /// Set for ports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<PortDirection>,
    /// Set for connections: the connected port ids.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connects: Option<Connection>,
}

impl ArchElement {
    pub fn new(id: impl Into<String>, name: impl Into<String>, kind: impl Into<String>, parent: Option<String>) -> Self {
        Self { id: id.into(), name: name.into(), kind: kind.into(), parent, direction: None, connects: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "RawArchitectureModel")]
pub struct ArchitectureModel {
    elements: Vec<ArchElement>,
}

#[derive(Deserialize)]
struct RawArchitectureModel {
    #[serde(default)]
    elements: Vec<ArchElement>,
}

impl From<RawArchitectureModel> for ArchitectureModel {
    fn from(raw: RawArchitectureModel) -> Self {
        ArchitectureModel::new(raw.elements)
    }
}

impl ArchitectureModel {
    pub fn new(mut elements: Vec<ArchElement>) -> Self {
        elements.sort_by(|a, b| a.id.cmp(&b.id));
        Self { elements }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        crate::to_canonical_json(self)
    }

    pub fn elements(&self) -> &[ArchElement] {
        &self.elements
    }

    pub fn element(&self, id: &str) -> Option<&ArchElement> {
        self.elements.iter().find(|e| e.id == id)
    }

    pub fn children<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a ArchElement> + 'a {
        self.elements.iter().filter(move |e| e.parent.as_deref() == Some(id))
    }
}

pub fn validate_architecture_model(arch: &ArchitectureModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for el in arch.elements() {
        if !ids.insert(el.id.as_str()) {
            out.push(Violation::error(ViolationCode::DuplicateElementId, el.id.clone(), "element id used more than once"));
        }
    }
    let parents: HashMap<&str, &str> =
        arch.elements().iter().filter_map(|e| e.parent.as_deref().map(|p| (e.id.as_str(), p))).collect();
    for el in arch.elements() {
        let Some(parent) = el.parent.as_deref() else { continue };
        if !ids.contains(parent) {
            out.push(Violation::error(
                ViolationCode::DanglingParent,
                el.id.clone(),
                format!("parent `{parent}` does not exist"),
            ));
            continue;
        }
        // Walk up at most |elements| steps; coming back to `el` means a cycle.
        let mut cursor = parent;
        for _ in 0..parents.len() {
            if cursor == el.id {
                out.push(Violation::error(ViolationCode::ParentCycle, el.id.clone(), "parent chain is cyclic"));
                break;
            }
            match parents.get(cursor) {
                Some(next) => cursor = next,
                None => break,
            }
        }
    }
    out
}
