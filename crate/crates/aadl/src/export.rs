//! Writes an architecture model back in the subset syntax.
//!
//! Every component instance becomes its own classifier named after its id,
//! so importing the output reproduces the same model.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use reqimpact_core::model::{ArchElement, ArchitectureModel, PortDirection};
use thiserror::Error;

use crate::parser::Category;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExportError {
    #[error("element `{0}` has kind `{1}`, which the subset cannot express")]
    UnsupportedKind(String, String),
    #[error("element `{0}` must be a child of a component")]
    Orphan(String),
    #[error("element `{id}` is named `{name}`, expected the last segment of its id")]
    NameMismatch { id: String, name: String },
    #[error("connection `{0}` has no endpoints")]
    MissingEndpoints(String),
}

fn classifier_name(id: &str) -> String {
    id.replace('.', "__")
}

fn relative<'a>(owner: &str, id: &'a str) -> &'a str {
    id.strip_prefix(owner).and_then(|s| s.strip_prefix('.')).unwrap_or(id)
}

pub fn export_aadl(model: &ArchitectureModel) -> Result<String, ExportError> {
    let mut children: BTreeMap<&str, Vec<&ArchElement>> = BTreeMap::new();
    for e in model.elements() {
        if let Some(p) = &e.parent {
            children.entry(p.as_str()).or_default().push(e);
        }
    }
    let mut out = String::new();
    for e in model.elements() {
        let Some(category) = Category::from_keyword(&e.kind) else {
            if e.kind == "port" || e.kind == "connection" {
                if e.parent.is_none() {
                    return Err(ExportError::Orphan(e.id.clone()));
                }
                continue;
            }
            return Err(ExportError::UnsupportedKind(e.id.clone(), e.kind.clone()));
        };
        let expected_name = match &e.parent {
            Some(p) => relative(p, &e.id).to_string(),
            None => e.id.clone(),
        };
        if e.name != expected_name || expected_name.contains('.') {
            return Err(ExportError::NameMismatch { id: e.id.clone(), name: e.name.clone() });
        }
        let kids = children.get(e.id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        let name = classifier_name(&e.id);
        let _ = writeln!(out, "{} {name}", category.as_str());
        let ports: Vec<_> = kids.iter().filter(|k| k.kind == "port").collect();
        if !ports.is_empty() {
            out.push_str("  features\n");
            for p in ports {
                let dir = match p.direction.unwrap_or(PortDirection::InOut) {
                    PortDirection::In => "in",
                    PortDirection::Out => "out",
                    PortDirection::InOut => "in out",
                };
                let _ = writeln!(out, "    {}: {dir} event data port;", p.name);
            }
        }
        let subs: Vec<_> = kids.iter().filter(|k| Category::from_keyword(&k.kind).is_some()).collect();
        if !subs.is_empty() {
            out.push_str("  subcomponents\n");
            for s in subs {
                let _ = writeln!(out, "    {}: {} {};", s.name, s.kind, classifier_name(&s.id));
            }
        }
        let conns: Vec<_> = kids.iter().filter(|k| k.kind == "connection").collect();
        if !conns.is_empty() {
            out.push_str("  connections\n");
            for c in conns {
                let ends = c.connects.as_ref().ok_or_else(|| ExportError::MissingEndpoints(c.id.clone()))?;
                let _ = writeln!(out, "    {}: port {} -> {};", c.name, relative(&e.id, &ends.from), relative(&e.id, &ends.to));
            }
        }
        let _ = writeln!(out, "end {name};\n");
    }
    Ok(out)
}
