use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::architecture::ArchitectureModel;
use crate::model::requirements::RequirementsModel;
use crate::violation::{Violation, ViolationCode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TraceKind {
    /// Verified fulfillment.
    Satisfies,
    /// Intended allocation.
    AllocatedTo,
}

impl fmt::Display for TraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraceKind::Satisfies => "Satisfies",
            TraceKind::AllocatedTo => "AllocatedTo",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub id: String,
    pub kind: TraceKind,
    pub requirement: String,
    pub elements: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "RawTraceModel")]
pub struct TraceModel {
    traces: Vec<Trace>,
}

#[derive(Deserialize)]
struct RawTraceModel {
    #[serde(default)]
    traces: Vec<Trace>,
}

impl From<RawTraceModel> for TraceModel {
    fn from(raw: RawTraceModel) -> Self {
        TraceModel::new(raw.traces)
    }
}

impl TraceModel {
    pub fn new(mut traces: Vec<Trace>) -> Self {
        traces.sort_by(|a, b| a.id.cmp(&b.id));
        Self { traces }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        crate::to_canonical_json(self)
    }

    pub fn traces(&self) -> &[Trace] {
        &self.traces
    }

    pub fn for_requirement<'a>(&'a self, req: &'a str) -> impl Iterator<Item = &'a Trace> + 'a {
        self.traces.iter().filter(move |t| t.requirement == req)
    }

    /// Every element reachable from `req` through any trace kind.
    pub fn traced_elements(&self, req: &str) -> BTreeSet<String> {
        self.for_requirement(req).flat_map(|t| t.elements.iter().cloned()).collect()
    }
}

pub fn validate_trace_model(traces: &TraceModel, reqs: &RequirementsModel, arch: &ArchitectureModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    let mut entries: BTreeMap<(TraceKind, &str, &BTreeSet<String>), &str> = BTreeMap::new();
    for trace in traces.traces() {
        if !ids.insert(trace.id.as_str()) {
            out.push(Violation::error(ViolationCode::DuplicateTraceId, trace.id.clone(), "trace id used more than once"));
        }
        if !reqs.contains_requirement(&trace.requirement) {
            out.push(Violation::error(
                ViolationCode::DanglingRequirement,
                trace.requirement.clone(),
                format!("trace `{}` references missing requirement", trace.id),
            ));
        }
        if trace.elements.is_empty() {
            out.push(Violation::error(ViolationCode::EmptyElementSet, trace.id.clone(), "trace links no element"));
        }
        for el in &trace.elements {
            if arch.element(el).is_none() {
                out.push(Violation::error(
                    ViolationCode::DanglingElement,
                    el.clone(),
                    format!("trace `{}` references missing element", trace.id),
                ));
            }
        }
        let key = (trace.kind, trace.requirement.as_str(), &trace.elements);
        if let Some(first) = entries.get(&key) {
            out.push(Violation::error(
                ViolationCode::DuplicateTrace,
                trace.id.clone(),
                format!("duplicates trace `{first}`"),
            ));
        } else {
            entries.insert(key, &trace.id);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::architecture::ArchElement;
    use crate::model::requirements::{Property, Requirement};

    fn fixture() -> (RequirementsModel, ArchitectureModel) {
        let reqs = RequirementsModel::new(
            vec![Requirement {
                id: "R9".into(),
                text: "show alarm".into(),
                properties: vec![Property { id: "P1".into(), text: "show".into(), constraints: vec![] }],
            }],
            vec![],
        );
        let arch = ArchitectureModel::new(vec![ArchElement::new("SD", "SD", "system", None)]);
        (reqs, arch)
    }

    fn trace(id: &str, elements: &[&str]) -> Trace {
        Trace {
            id: id.into(),
            kind: TraceKind::Satisfies,
            requirement: "R9".into(),
            elements: elements.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn missing_element_is_reported() {
        let (reqs, arch) = fixture();
        let v = validate_trace_model(&TraceModel::new(vec![trace("t1", &["SD", "X9"])]), &reqs, &arch);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, ViolationCode::DanglingElement);
        assert_eq!(v[0].location, "X9");
    }

    #[test]
    fn empty_trace_model_is_sound() {
        let (reqs, arch) = fixture();
        assert!(validate_trace_model(&TraceModel::default(), &reqs, &arch).is_empty());
    }

    #[test]
    fn duplicate_entry_and_empty_set() {
        let (reqs, arch) = fixture();
        let v = validate_trace_model(
            &TraceModel::new(vec![trace("t1", &["SD"]), trace("t2", &["SD"]), trace("t3", &[])]),
            &reqs,
            &arch,
        );
        let codes: Vec<_> = v.into_iter().map(|v| v.code).collect();
        assert_eq!(codes, vec![ViolationCode::DuplicateTrace, ViolationCode::EmptyElementSet]);
    }
}
