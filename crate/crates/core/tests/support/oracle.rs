//! Brute-force reference for path traversal and a random path generator.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::Rng;
use reqimpact_core::model::{Direction, RelationKind};
use reqimpact_core::propagation::{NodeStatus, PathEdge, PathNode, PropagationPath};
use reqimpact_core::rules::TraversalRule;
use reqimpact_core::{AtomicEdit, ChangeType, ProposedChange, Rationale};

use super::transcription::{parse, Cell};

pub const TRAVERSAL_ROWS: [ChangeType; 6] = [
    ChangeType::DeleteRequirement,
    ChangeType::DeleteProperty,
    ChangeType::ChangeProperty,
    ChangeType::AddConstraintToProperty,
    ChangeType::DeleteConstraintOfProperty,
    ChangeType::ChangeConstraintOfProperty,
];

/// Take cells read from the transcription fixture.
pub fn take_cells() -> BTreeSet<(ChangeType, RelationKind, Direction)> {
    let text = std::fs::read_to_string(super::fixture_dir("rules").join("published-cells.txt")).unwrap();
    parse(&text)
        .into_iter()
        .filter_map(|c| match c {
            Cell::Traversal { change, relation, direction, rule: TraversalRule::Take } => Some((change, relation, direction)),
            _ => None,
        })
        .collect()
}

/// Last requirement of every maximal walk from `selected` that only uses
/// steps allowed by `take` and never revisits a requirement.
pub fn terminals(
    path: &PropagationPath,
    selected: &str,
    take: &BTreeSet<(ChangeType, RelationKind, Direction)>,
) -> BTreeSet<String> {
    let change_of = |n: &str| path.nodes.get(n).and_then(|p| p.accepted_change.as_ref()).map(|c| c.change_type);
    let impacted = |n: &str| path.nodes.get(n).is_some_and(|p| p.status.is_impacted());
    let mut result = BTreeSet::new();
    let mut walks: Vec<Vec<String>> = vec![vec![selected.to_string()]];
    while let Some(walk) = walks.pop() {
        let last = walk.last().unwrap().clone();
        let mut extensions = Vec::new();
        if let Some(change) = change_of(&last) {
            for e in &path.edges {
                let (next, direction) = if e.source == last {
                    (&e.target, Direction::Outgoing)
                } else if e.target == last {
                    (&e.source, Direction::Incoming)
                } else {
                    continue;
                };
                if impacted(next) && !walk.contains(next) && take.contains(&(change, e.kind, direction)) {
                    let mut longer = walk.clone();
                    longer.push(next.clone());
                    extensions.push(longer);
                }
            }
        }
        if extensions.is_empty() {
            result.insert(last);
        } else {
            walks.extend(extensions);
        }
    }
    result
}

/// A complete path of one to `max_nodes` impacted requirements: a random
/// spanning tree from `N0` plus a few extra edges, uniform relation kinds and
/// accepted changes drawn from the traversal rows.
pub fn random_path<R: Rng>(rng: &mut R, max_nodes: usize) -> PropagationPath {
    let n = rng.random_range(1..=max_nodes);
    let ids: Vec<String> = (0..n).map(|i| format!("N{i}")).collect();
    let mut nodes = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        let change = *TRAVERSAL_ROWS.choose(rng).unwrap();
        let status = if i == 0 { NodeStatus::StartingImpacted } else { NodeStatus::Impacted };
        nodes.insert(
            id.clone(),
            PathNode {
                requirement: id.clone(),
                status,
                accepted_change: Some(ProposedChange::new(format!("c@{id}"), change, Rationale::DomainChange, id.clone())),
            },
        );
    }
    let mut edges = Vec::new();
    let mut push = |rng: &mut R, from: &str, to: &str| {
        let kind = *RelationKind::ALL.choose(rng).unwrap();
        let (source, target) = if rng.random_bool(0.5) { (from, to) } else { (to, from) };
        let id = format!("e{:02}", edges.len());
        let change = nodes[from].accepted_change.as_ref().unwrap().change_type;
        edges.push(PathEdge {
            relation: id,
            kind,
            source: source.into(),
            target: target.into(),
            from: from.into(),
            to: to.into(),
            edit: AtomicEdit::PropagateChange(change),
            automatic: false,
            unspecified_cell: false,
            justification: None,
        });
    };
    for i in 1..n {
        let parent = rng.random_range(0..i);
        push(rng, &ids[parent], &ids[i]);
    }
    if n > 2 {
        for _ in 0..rng.random_range(0..n) {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a != b {
                push(rng, &ids[a], &ids[b]);
            }
        }
    }
    PropagationPath { nodes, edges, complete: true, ..Default::default() }
}
