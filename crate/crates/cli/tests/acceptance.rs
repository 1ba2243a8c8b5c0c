//! Acceptance criteria 1 to 9, one PASS/FAIL line each.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeSet;
use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reqimpact_core::propagation::NodeStatus;
use reqimpact_core::{
    default_rules, impact, impact_of_added_requirement, traverse, ArchitectureModel, ChangePayload, ChangeType,
    ProposedChange, Rationale, Relation, RelationKind, RequirementsModel, RuleSet, Session, TraceModel,
};
use support::{oracle, transcription};

type Check = fn() -> Result<(), String>;

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn set(ids: &[&str]) -> BTreeSet<String> {
    ids.iter().map(|s| s.to_string()).collect()
}

fn r14_session() -> Session {
    support::scripted_session("rpm", "change-r14.json", "choices-r14.json")
}

fn rule_table_fidelity() -> Result<(), String> {
    use transcription::Cell;
    let cells = transcription::parse(&support::read("rules", "published-cells.txt"));
    let count = |f: fn(&Cell) -> bool| cells.iter().filter(|c| f(c)).count();
    let counts = (
        count(|c| matches!(c, Cell::Alternatives { .. })),
        count(|c| matches!(c, Cell::AddRequirement { .. })),
        count(|c| matches!(c, Cell::Traversal { .. })),
    );
    ensure(counts == (25, 8, 36), || format!("transcription has {counts:?} cells"))?;
    let rules = default_rules();
    let mismatches = transcription::mismatches(&cells, &rules);
    ensure(mismatches.is_empty(), || format!("{} mismatches: {mismatches:?}", mismatches.len()))?;
    ensure(rules.propagation_cells().count() == 25 && rules.add_requirement_cells().count() == 8, || {
        "defaults hold unpublished cells".into()
    })
}

fn r14_propagation() -> Result<(), String> {
    let started = Instant::now();
    let s = r14_session();
    let elapsed = started.elapsed();
    ensure(s.is_complete(), || "path incomplete".into())?;
    let expected = [
        ("R14", NodeStatus::StartingImpacted),
        ("R7", NodeStatus::Impacted),
        ("R9", NodeStatus::Impacted),
        ("R4", NodeStatus::NoImpact),
        ("R6", NodeStatus::Unvisited),
    ];
    for (req, status) in expected {
        ensure(s.status(req) == status, || format!("{req} is {:?}, want {status:?}", s.status(req)))?;
    }
    let visited: BTreeSet<String> = s.path.nodes.keys().cloned().collect();
    ensure(visited == set(&["R14", "R4", "R7", "R9"]), || format!("visited {visited:?}"))?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))
}

fn traversal_golden() -> Result<(), String> {
    let rules = default_rules();
    let refinement = support::scripted_session("refinement", "change.json", "choices.json");
    for selected in ["R1", "R2", "R5"] {
        let got = traverse(&refinement.path, selected, &rules).map_err(|e| e.to_string())?;
        ensure(got == set(&["R5"]), || format!("refinement from {selected}: {got:?}"))?;
    }
    let s = r14_session();
    let got = traverse(&s.path, "R14", &rules).map_err(|e| e.to_string())?;
    ensure(got == set(&["R9"]), || format!("R14 terminals {got:?}"))?;
    let analysis = s.impact("R14").map_err(|e| e.to_string())?;
    let arch = ArchitectureModel::from_json(&support::read("rpm", "architecture.json")).map_err(|e| e.to_string())?;
    let names: BTreeSet<String> = analysis
        .result
        .candidates()
        .iter()
        .map(|c| arch.element(&c.element).map(|e| e.name.clone()).unwrap_or_else(|| format!("?{}", c.element)))
        .collect();
    ensure(names == set(&["SD", "SDC", "SDM", "AS", "AR"]), || format!("candidates {names:?}"))
}

fn add_requirement_golden() -> Result<(), String> {
    let change = support::change("rpm", "change-add-rx.json");
    let Some(ChangePayload::Requirement { requirement, relations }) = &change.payload else {
        return Err("RX change has no requirement payload".into());
    };
    let traces = support::traces("rpm");
    let rules = default_rules();
    let refines = impact_of_added_requirement(requirement, relations, &traces, &rules);
    let got: BTreeSet<String> = refines.result.element_ids().into_iter().map(str::to_string).collect();
    ensure(!got.is_empty() && got == traces.traced_elements("R5"), || format!("RX refines R5 gave {got:?}"))?;
    let contained = [Relation::new("R5-contains-RX", "R5", RelationKind::Contains, "RX")];
    let outcome = impact_of_added_requirement(requirement, &contained, &traces, &rules).result.outcome();
    ensure(outcome == "NoArchImpact", || format!("R5 contains RX gave {outcome}"))?;
    let outcome = impact_of_added_requirement(requirement, &[], &traces, &rules).result.outcome();
    ensure(outcome == "ManualAnalysisRequired", || format!("isolated RX gave {outcome}"))
}

fn dispatch() -> Result<(), String> {
    let traces = support::traces("rpm");
    let rules = default_rules();
    let change = |t: ChangeType, r: Rationale| {
        let target = if t.targets_relation() { "R14-contains-R7" } else { "R14" };
        ProposedChange::new("c", t, r, target)
    };
    let outcome = |c: ProposedChange| impact(&c, "R14", None, &traces, &rules).map(|a| a.result.outcome());
    for t in [ChangeType::AddRelation, ChangeType::DeleteRelation, ChangeType::UpdateRelation] {
        let got = outcome(change(t, Rationale::DomainChange)).map_err(|e| e.to_string())?;
        ensure(got == "NoArchImpact", || format!("{t} gave {got}"))?;
    }
    let got = outcome(change(ChangeType::AddProperty, Rationale::DomainChange)).map_err(|e| e.to_string())?;
    ensure(got == "ManualAnalysisRequired", || format!("AddProperty gave {got}"))?;
    for t in ChangeType::ALL {
        let got = outcome(change(t, Rationale::Refactoring)).map_err(|e| e.to_string())?;
        ensure(got == "NoArchImpact", || format!("refactoring {t} gave {got}"))?;
    }
    Ok(())
}

fn oracle_equivalence() -> Result<(), String> {
    let started = Instant::now();
    let rules = default_rules();
    let take = oracle::take_cells();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce97);
    let mut discrepancies = 0;
    for _ in 0..1000 {
        let path = oracle::random_path(&mut rng, 8);
        ensure(path.nodes.len() <= 8, || "path exceeds 8 nodes".into())?;
        for selected in path.nodes.keys() {
            let got = traverse(&path, selected, &rules).map_err(|e| e.to_string())?;
            discrepancies += usize::from(got != oracle::terminals(&path, selected, &take));
        }
    }
    ensure(discrepancies == 0, || format!("{discrepancies} discrepancies"))?;
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))
}

fn determinism_and_replay() -> Result<(), String> {
    for (dir, change, choices) in
        [("rpm", "change-r14.json", "choices-r14.json"), ("refinement", "change.json", "choices.json"), ("motivating", "change.json", "choices.json")]
    {
        let s = support::scripted_session(dir, change, choices);
        let json = s.to_json();
        let replayed = s.replay().map_err(|e| e.to_string())?.to_json();
        ensure(json == replayed, || format!("{dir}: replay differs"))?;
        let reloaded = Session::from_json(&json).map_err(|e| e.to_string())?.to_json();
        ensure(json == reloaded, || format!("{dir}: session reload differs"))?;
    }
    for dir in ["rpm", "refinement", "motivating"] {
        let text = support::read(dir, "requirements.json");
        let model = RequirementsModel::from_json(&text).map_err(|e| e.to_string())?.0;
        let again = RequirementsModel::from_json(&model.to_json()).map_err(|e| e.to_string())?.0.to_json();
        ensure(model.to_json() == again, || format!("{dir}: requirements round trip differs"))?;
        let traces = TraceModel::from_json(&support::read(dir, "traces.json")).map_err(|e| e.to_string())?;
        let again = TraceModel::from_json(&traces.to_json()).map_err(|e| e.to_string())?.to_json();
        ensure(traces.to_json() == again, || format!("{dir}: traces round trip differs"))?;
    }
    let arch = ArchitectureModel::from_json(&support::read("rpm", "architecture.json")).map_err(|e| e.to_string())?;
    ensure(arch.to_json() == support::read("rpm", "architecture.json"), || "architecture not canonical".into())?;
    let rules: RuleSet = serde_json::from_str(&default_rules().to_json()).map_err(|e| e.to_string())?;
    ensure(rules.to_json() == default_rules().to_json(), || "rules round trip differs".into())
}

fn false_positive_pruning() -> Result<(), String> {
    let s = support::scripted_session("motivating", "change.json", "choices.json");
    ensure(s.is_complete(), || "path incomplete".into())?;
    ensure(s.status("R2") == NodeStatus::Impacted && s.status("R1") == NodeStatus::NoImpact, || {
        format!("R1 {:?}, R2 {:?}", s.status("R1"), s.status("R2"))
    })?;
    let analysis = s.impact("R3").map_err(|e| e.to_string())?;
    let got: BTreeSet<String> = analysis.result.element_ids().into_iter().map(str::to_string).collect();
    ensure(got == set(&["SD_BLOOD"]), || format!("candidates {got:?}"))?;
    let traces = support::traces("motivating");
    ensure(traces.traced_elements("R1").contains("SD_TEMPERATURE"), || "R1 does not trace SD_TEMPERATURE".into())
}

fn aadl_import() -> Result<(), String> {
    let text = support::read("rpm", "rpm.aadl");
    let (model, diags) = reqimpact_aadl::import_architecture(&text);
    ensure(!reqimpact_aadl::has_errors(&diags), || format!("diagnostics {diags:?}"))?;
    let parent = |id: &str| model.element(id).and_then(|e| e.parent.clone());
    let expected = [
        ("RPM.SD", "RPM"),
        ("RPM.SDC", "RPM"),
        ("RPM.HPC", "RPM"),
        ("RPM.CPC", "RPM"),
        ("RPM.HPC.SDM", "RPM.HPC"),
        ("RPM.HPC.AS", "RPM.HPC"),
        ("RPM.HPC.WS", "RPM.HPC"),
        ("RPM.CPC.AR", "RPM.CPC"),
        ("RPM.CPC.WC", "RPM.CPC"),
    ];
    for (child, want) in expected {
        ensure(parent(child).as_deref() == Some(want), || format!("{child} has parent {:?}", parent(child)))?;
    }
    ensure(model.element("RPM").is_some_and(|e| e.parent.is_none()), || "RPM is not the root".into())?;
    let (again, _) = reqimpact_aadl::import_architecture(&text);
    ensure(again == model, || "re-import differs".into())?;
    let exported = reqimpact_aadl::export_aadl(&model).map_err(|e| e.to_string())?;
    let (round, diags) = reqimpact_aadl::import_architecture(&exported);
    ensure(!reqimpact_aadl::has_errors(&diags), || format!("export re-import diagnostics {diags:?}"))?;
    let ids = |m: &ArchitectureModel| m.elements().iter().map(|e| e.id.clone()).collect::<BTreeSet<_>>();
    ensure(ids(&round) == ids(&model), || "exported model re-imports differently".into())
}

#[test]
fn acceptance_criteria() {
    let checks: [(u8, &str, Check); 9] = [
        (1, "rule tables reproduce every published cell", rule_table_fidelity),
        (2, "R14 propagation path", r14_propagation),
        (3, "traversal golden examples", traversal_golden),
        (4, "add-requirement golden examples", add_requirement_golden),
        (5, "impact dispatch", dispatch),
        (6, "traversal equals the walk oracle", oracle_equivalence),
        (7, "determinism and replay", determinism_and_replay),
        (8, "false-positive pruning", false_positive_pruning),
        (9, "AADL import of the RPM architecture", aadl_import),
    ];
    let mut failed = Vec::new();
    let mut out = std::io::stdout().lock();
    for (n, name, check) in checks {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match result {
            Ok(()) => writeln!(out, "PASS criterion {n}: {name}").unwrap(),
            Err(why) => {
                writeln!(out, "FAIL criterion {n}: {name}: {why}").unwrap();
                failed.push(n);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria {failed:?}");
}
