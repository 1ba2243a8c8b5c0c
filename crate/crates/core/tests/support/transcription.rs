//! Reads the published rule cells from their phrase form, independently of
//! the table encoding in the library.

use reqimpact_core::model::{Direction, RelationKind};
use reqimpact_core::rules::{AddRequirementRule, TraversalRule};
use reqimpact_core::{AtomicEdit, ChangeType};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Alternatives { change: ChangeType, relation: RelationKind, direction: Direction, edits: Vec<AtomicEdit> },
    AddRequirement { relation: RelationKind, direction: Direction, rule: AddRequirementRule },
    Traversal { change: ChangeType, relation: RelationKind, direction: Direction, rule: TraversalRule },
}

fn change_phrase(text: &str, subject: &str) -> Option<ChangeType> {
    let t = text.trim().to_lowercase();
    let s = subject.to_lowercase();
    let table = [
        (format!("delete {s}"), ChangeType::DeleteRequirement),
        (format!("add property to {s}"), ChangeType::AddProperty),
        (format!("delete property of {s}"), ChangeType::DeleteProperty),
        (format!("change property of {s}"), ChangeType::ChangeProperty),
        (format!("add constraint to property of {s}"), ChangeType::AddConstraintToProperty),
        (format!("delete constraint of property of {s}"), ChangeType::DeleteConstraintOfProperty),
        (format!("change constraint of property of {s}"), ChangeType::ChangeConstraintOfProperty),
    ];
    table.into_iter().find(|(p, _)| *p == t).map(|(_, c)| c)
}

fn kind_phrase(text: &str) -> RelationKind {
    match text {
        "contains" => RelationKind::Contains,
        "refines" => RelationKind::Refines,
        "partially refines" => RelationKind::PartiallyRefines,
        "requires" => RelationKind::Requires,
        "conflicts" => RelationKind::Conflicts,
        other => panic!("unknown relation phrase `{other}`"),
    }
}

/// `"<a> <kind> <b>"`: outgoing when `a` is `subject`.
fn column(text: &str, subject: &str) -> (RelationKind, Direction) {
    let words: Vec<&str> = text.split_whitespace().collect();
    let (first, last) = (words[0], words[words.len() - 1]);
    let kind = kind_phrase(&words[1..words.len() - 1].join(" "));
    let direction = if first == subject {
        Direction::Outgoing
    } else {
        assert_eq!(last, subject, "column `{text}`");
        Direction::Incoming
    };
    (kind, direction)
}

fn edit_phrase(text: &str) -> AtomicEdit {
    let t = text.trim().trim_start_matches('(').trim_end_matches(')').trim();
    match t {
        "No impact" => return AtomicEdit::NoImpact,
        "Delete relation" => return AtomicEdit::DeleteRelation,
        "Delete R_k & Delete relation" => return AtomicEdit::DeleteRequirementAndRelation,
        _ => {}
    }
    if let Some(head) = t.strip_suffix(" & Delete relation") {
        let change = change_phrase(head, "R_k").unwrap_or_else(|| panic!("edit `{t}`"));
        return AtomicEdit::PropagateChangeAndDeleteRelation(change);
    }
    AtomicEdit::PropagateChange(change_phrase(t, "R_k").unwrap_or_else(|| panic!("edit `{t}`")))
}

pub fn parse(text: &str) -> Vec<Cell> {
    let mut cells = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let parts: Vec<&str> = line.split('|').map(str::trim).collect();
        assert_eq!(parts.len(), 4, "line `{line}`");
        let (table, row, col, cell) = (parts[0], parts[1], parts[2], parts[3]);
        match table {
            "alternatives" => {
                let change = change_phrase(row, "R_i").unwrap_or_else(|| panic!("row `{row}`"));
                let (relation, direction) = column(col, "R_i");
                let edits = cell.split(" or ").map(edit_phrase).collect();
                cells.push(Cell::Alternatives { change, relation, direction, edits });
            }
            "add-requirement" => {
                assert_eq!(row, "Add R_x");
                let (relation, direction) = column(col, "R_x");
                let rule = match cell {
                    "No impacted AE" => AddRequirementRule::NoImpactedAE,
                    "AEs traced from R_i are candidate" => AddRequirementRule::TracedFromExisting,
                    other => panic!("add-requirement cell `{other}`"),
                };
                cells.push(Cell::AddRequirement { relation, direction, rule });
            }
            "traversal" => {
                let change = change_phrase(row, "R_i").unwrap_or_else(|| panic!("row `{row}`"));
                let (relation, direction) = column(col, "R_i");
                let rule = match cell {
                    "Take R_k in the traversal" => TraversalRule::Take,
                    "Do not take R_k in the traversal" => TraversalRule::DontTake,
                    other => panic!("traversal cell `{other}`"),
                };
                cells.push(Cell::Traversal { change, relation, direction, rule });
            }
            other => panic!("unknown table `{other}`"),
        }
    }
    cells
}

/// Cell-by-cell comparison; returns one line per mismatch.
pub fn mismatches(cells: &[Cell], rules: &reqimpact_core::RuleSet) -> Vec<String> {
    use reqimpact_core::rules::PropagationCell;
    use reqimpact_core::RuleKey;
    let mut out = Vec::new();
    for cell in cells {
        match cell {
            Cell::Alternatives { change, relation, direction, edits } => {
                let key = RuleKey::new(*change, *relation, *direction);
                match rules.propagation(key) {
                    PropagationCell::Alternatives(set) if set.edits() == edits.as_slice() => {}
                    got => out.push(format!("{}: expected {edits:?}, got {got:?}", key.address())),
                }
            }
            Cell::AddRequirement { relation, direction, rule } => {
                let got = rules.add_requirement(*relation, *direction);
                if got != (*rule, true) {
                    out.push(format!("AddRequirement {relation:?} {direction:?}: expected {rule:?}, got {got:?}"));
                }
            }
            Cell::Traversal { change, relation, direction, rule } => {
                let key = RuleKey::new(*change, *relation, *direction);
                let got = rules.traversal(key);
                if got != *rule {
                    out.push(format!("{}: expected {rule:?}, got {got:?}", key.address()));
                }
            }
        }
    }
    out
}
