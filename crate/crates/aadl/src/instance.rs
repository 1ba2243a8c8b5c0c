//! Builds the instance tree from parsed declarations.

use std::collections::{BTreeMap, BTreeSet};

use reqimpact_core::model::{ArchElement, ArchitectureModel, Connection};

use crate::diagnostic::{ImportDiagnostic, Span};
use crate::parser::{Category, ConnectionDecl, Declaration, Feature, PortRef, Subcomponent, Unit};

/// A component type merged with its implementation, if any.
#[derive(Debug, Clone)]
struct Classifier {
    category: Category,
    name: String,
    features: Vec<Feature>,
    subcomponents: Vec<Subcomponent>,
    connections: Vec<ConnectionDecl>,
    at: Span,
}

pub fn instantiate(unit: &Unit) -> (ArchitectureModel, Vec<ImportDiagnostic>) {
    let mut diags = Vec::new();
    let (classifiers, order) = classifiers(unit, &mut diags);

    let referenced: BTreeSet<&str> = classifiers
        .values()
        .flat_map(|c| c.subcomponents.iter().filter_map(|s| s.classifier.as_deref()))
        .collect();
    let mut builder = Builder { classifiers: &classifiers, elements: Vec::new(), diags, instantiated: BTreeSet::new() };
    for name in &order {
        if !referenced.contains(name.as_str()) {
            let c = &classifiers[name];
            builder.elements.push(ArchElement::new(name.clone(), name.clone(), c.category.as_str(), None));
            let mut stack = vec![name.clone()];
            builder.body(name, c, &mut stack);
        }
    }
    for name in &order {
        if builder.instantiated.contains(name) {
            continue;
        }
        let at = classifiers[name].at;
        builder.diags.push(if on_cycle(&classifiers, name) {
            ImportDiagnostic::error(at, format!("`{name}` contains itself through its subcomponents and is not instantiated"))
        } else {
            ImportDiagnostic::warning(at, format!("`{name}` is referenced only by rejected subcomponents and is not instantiated"))
        });
    }
    let mut diags = builder.diags;
    let mut seen = BTreeSet::new();
    diags.retain(|d| seen.insert((d.line, d.column, d.message.clone())));
    (ArchitectureModel::new(builder.elements), diags)
}

fn on_cycle(classifiers: &BTreeMap<String, Classifier>, start: &str) -> bool {
    let mut seen = BTreeSet::new();
    let mut todo = vec![start];
    while let Some(name) = todo.pop() {
        let Some(c) = classifiers.get(name) else { continue };
        for next in c.subcomponents.iter().filter_map(|s| s.classifier.as_deref()) {
            if next == start {
                return true;
            }
            if seen.insert(next) {
                todo.push(next);
            }
        }
    }
    false
}

fn classifiers(unit: &Unit, diags: &mut Vec<ImportDiagnostic>) -> (BTreeMap<String, Classifier>, Vec<String>) {
    let mut map: BTreeMap<String, Classifier> = BTreeMap::new();
    let mut order = Vec::new();
    let mut implemented = BTreeSet::new();
    for decl in unit.declarations.iter().filter(|d| d.implementation.is_none()) {
        if map.contains_key(&decl.name) {
            diags.push(ImportDiagnostic::error(decl.at, format!("duplicate declaration of `{}`", decl.name)));
            continue;
        }
        order.push(decl.name.clone());
        map.insert(decl.name.clone(), from_decl(decl));
    }
    for decl in unit.declarations.iter().filter(|d| d.implementation.is_some()) {
        let full = format!("{}.{}", decl.name, decl.implementation.as_deref().unwrap_or(""));
        if !implemented.insert(decl.name.clone()) {
            diags.push(ImportDiagnostic::error(decl.at, format!("`{}` already has an implementation; `{full}` ignored", decl.name)));
            continue;
        }
        match map.get_mut(&decl.name) {
            None => {
                order.push(decl.name.clone());
                map.insert(decl.name.clone(), from_decl(decl));
            }
            Some(c) if c.category != decl.category => diags.push(ImportDiagnostic::error(
                decl.at,
                format!("`{full}` is a {} but `{}` is a {}", decl.category.as_str(), decl.name, c.category.as_str()),
            )),
            Some(c) => {
                c.features.extend(decl.features.iter().cloned());
                c.subcomponents.extend(decl.subcomponents.iter().cloned());
                c.connections.extend(decl.connections.iter().cloned());
            }
        }
    }
    for c in map.values_mut() {
        dedupe_names(c, diags);
    }
    (map, order)
}

fn from_decl(d: &Declaration) -> Classifier {
    Classifier {
        category: d.category,
        name: d.name.clone(),
        features: d.features.clone(),
        subcomponents: d.subcomponents.clone(),
        connections: d.connections.clone(),
        at: d.at,
    }
}

/// Features, subcomponents and connections share one namespace per classifier.
fn dedupe_names(c: &mut Classifier, diags: &mut Vec<ImportDiagnostic>) {
    let mut names = BTreeSet::new();
    let owner = c.name.clone();
    let mut keep = |name: &str, at: Span| {
        let fresh = names.insert(name.to_string());
        if !fresh {
            diags.push(ImportDiagnostic::error(at, format!("`{name}` is declared twice in `{owner}`")));
        }
        fresh
    };
    c.features.retain(|f| keep(&f.name, f.at));
    c.subcomponents.retain(|s| keep(&s.name, s.at));
    c.connections.retain(|x| keep(&x.name, x.at));
}

struct Builder<'a> {
    classifiers: &'a BTreeMap<String, Classifier>,
    elements: Vec<ArchElement>,
    diags: Vec<ImportDiagnostic>,
    instantiated: BTreeSet<String>,
}

impl Builder<'_> {
    /// Ports, subcomponents and connections of the instance `id` of `c`.
    fn body(&mut self, id: &str, c: &Classifier, stack: &mut Vec<String>) {
        self.instantiated.insert(c.name.clone());
        for f in &c.features {
            let mut port = ArchElement::new(format!("{id}.{}", f.name), f.name.clone(), "port", Some(id.to_string()));
            port.direction = Some(f.direction);
            self.elements.push(port);
        }
        // subcomponent name -> its classifier, for port resolution
        let mut children: BTreeMap<&str, Option<&Classifier>> = BTreeMap::new();
        for s in &c.subcomponents {
            let child_id = format!("{id}.{}", s.name);
            let classifier = match &s.classifier {
                None => None,
                Some(name) => match self.classifiers.get(name) {
                    None => {
                        self.diags.push(ImportDiagnostic::error(s.at, format!("unknown classifier `{name}` for `{}`", s.name)));
                        continue;
                    }
                    Some(k) if k.category != s.category => {
                        self.diags.push(ImportDiagnostic::error(
                            s.at,
                            format!("`{}` is declared as {} but `{name}` is a {}", s.name, s.category.as_str(), k.category.as_str()),
                        ));
                        continue;
                    }
                    Some(_) if stack.contains(name) => {
                        self.diags.push(ImportDiagnostic::error(s.at, format!("`{}` would contain itself through `{name}`", s.name)));
                        continue;
                    }
                    Some(k) => Some(k),
                },
            };
            self.elements.push(ArchElement::new(child_id.clone(), s.name.clone(), s.category.as_str(), Some(id.to_string())));
            children.insert(&s.name, classifier);
            if let Some(k) = classifier {
                stack.push(k.name.clone());
                self.body(&child_id, k, stack);
                stack.pop();
            }
        }
        for x in &c.connections {
            let from = self.resolve(id, c, &children, &x.from);
            let to = self.resolve(id, c, &children, &x.to);
            let (Some(from), Some(to)) = (from, to) else { continue };
            let mut conn = ArchElement::new(format!("{id}.{}", x.name), x.name.clone(), "connection", Some(id.to_string()));
            conn.connects = Some(Connection { from, to });
            self.elements.push(conn);
        }
    }

    fn resolve(
        &mut self,
        id: &str,
        owner: &Classifier,
        children: &BTreeMap<&str, Option<&Classifier>>,
        r: &PortRef,
    ) -> Option<String> {
        let found = match &r.component {
            None => owner.features.iter().any(|f| f.name == r.port).then(|| format!("{id}.{}", r.port)),
            Some(sub) => match children.get(sub.as_str()) {
                Some(Some(k)) if k.features.iter().any(|f| f.name == r.port) => Some(format!("{id}.{sub}.{}", r.port)),
                _ => None,
            },
        };
        if found.is_none() {
            let shown = match &r.component {
                Some(sub) => format!("{sub}.{}", r.port),
                None => r.port.clone(),
            };
            self.diags.push(ImportDiagnostic::error(r.at, format!("connection references undeclared port `{shown}`")));
        }
        found
    }
}
