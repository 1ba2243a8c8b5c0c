#![allow(dead_code)]

pub mod oracle;
pub mod transcription;

use std::path::PathBuf;
use std::sync::Arc;

use reqimpact_core::propagation::ChoiceRecord;
use reqimpact_core::{default_rules, ProposedChange, RequirementsModel, Session, TraceModel};

pub fn fixture_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn read(dir: &str, file: &str) -> String {
    let path = fixture_dir(dir).join(file);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn model(dir: &str) -> RequirementsModel {
    let (model, notices) = RequirementsModel::from_json(&read(dir, "requirements.json")).unwrap();
    assert!(notices.is_empty(), "{notices:?}");
    model
}

pub fn traces(dir: &str) -> TraceModel {
    TraceModel::from_json(&read(dir, "traces.json")).unwrap()
}

pub fn change(dir: &str, file: &str) -> ProposedChange {
    ProposedChange::from_json(&read(dir, file)).unwrap()
}

pub fn choices(dir: &str, file: &str) -> Vec<ChoiceRecord> {
    serde_json::from_str(&read(dir, file)).unwrap()
}

/// Starts the session for `change_file` and applies `choices_file`.
pub fn scripted_session(dir: &str, change_file: &str, choices_file: &str) -> Session {
    let session = Session::start(
        Arc::new(model(dir)),
        Arc::new(traces(dir)),
        change(dir, change_file),
        Arc::new(default_rules()),
    )
    .unwrap();
    session.replay_script(&choices(dir, choices_file)).unwrap()
}
