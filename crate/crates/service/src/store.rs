//! Live sessions, optionally journaled to disk.
//!
//! Each session has its own lock, so choices for one session are applied one
//! at a time while other sessions proceed independently. With a journal
//! directory, every session is an append-only `<id>.jsonl` file: the initial
//! change, then one line per accepted choice. Opening the store replays them.

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use reqimpact_core::propagation::ChoiceRecord;
use reqimpact_core::{ProposedChange, RequirementsModel, RuleSet, Session, TraceModel};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use crate::error::ServiceError;

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "entry", rename_all = "snake_case")]
enum JournalEntry {
    Start { change: ProposedChange },
    Choice { choice: ChoiceRecord },
}

/// The model set sessions are started against.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub model: Arc<RequirementsModel>,
    pub traces: Arc<TraceModel>,
    pub rules: Arc<RuleSet>,
}

pub struct SessionStore {
    workspace: Workspace,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    journal: Option<PathBuf>,
}

impl SessionStore {
    pub fn in_memory(workspace: Workspace) -> Self {
        Self { workspace, sessions: RwLock::default(), journal: None }
    }

    /// Opens a journaled store, replaying every session found in `dir`.
    pub fn open(workspace: Workspace, dir: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        files.sort();
        let mut sessions = HashMap::new();
        for file in files {
            let id = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let session = replay_journal(&workspace, &id, &file)?;
            sessions.insert(id, Arc::new(Mutex::new(session)));
        }
        Ok(Self { workspace, sessions: RwLock::new(sessions), journal: Some(dir) })
    }

    pub fn workspace(&self) -> &Workspace {
        &self.workspace
    }

    pub fn len(&self) -> usize {
        self.sessions.read().map(|s| s.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn create(&self, change: ProposedChange) -> Result<Session, ServiceError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let w = &self.workspace;
        let session =
            Session::start(w.model.clone(), w.traces.clone(), change.clone(), w.rules.clone())?.with_id(id.clone());
        if let Some(dir) = &self.journal {
            append(&journal_path(dir, &id), &JournalEntry::Start { change })?;
        }
        self.sessions
            .write()
            .expect("session map poisoned")
            .insert(id.clone(), Arc::new(Mutex::new(session.clone())));
        tracing::info!(session = %id, "session started");
        Ok(session)
    }

    fn handle(&self, id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    pub async fn get(&self, id: &str) -> Result<Session, ServiceError> {
        Ok(self.handle(id)?.lock().await.clone())
    }

    /// Applies `choice` under the session lock; the journal line is written
    /// before the new state becomes visible.
    pub async fn choose(&self, id: &str, choice: ChoiceRecord) -> Result<Session, ServiceError> {
        let handle = self.handle(id)?;
        let mut guard = handle.lock().await;
        let mut next = guard.clone();
        next.apply_choice(choice)?;
        if let (Some(dir), Some(applied)) = (&self.journal, next.log.last()) {
            append(&journal_path(dir, id), &JournalEntry::Choice { choice: applied.clone() })?;
        }
        *guard = next.clone();
        Ok(next)
    }
}

fn journal_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.jsonl"))
}

fn append(path: &Path, entry: &JournalEntry) -> Result<(), ServiceError> {
    let mut line = serde_json::to_string(entry).map_err(reqimpact_core::Error::from)?;
    line.push('\n');
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    file.write_all(line.as_bytes())?;
    file.sync_data()?;
    Ok(())
}

fn replay_journal(w: &Workspace, id: &str, path: &Path) -> Result<Session, ServiceError> {
    let text = fs::read_to_string(path)?;
    let mut session: Option<Session> = None;
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let entry: JournalEntry = serde_json::from_str(line)
            .map_err(|e| ServiceError::Malformed(format!("{}:{}: {e}", path.display(), n + 1)))?;
        match (entry, session.as_mut()) {
            (JournalEntry::Start { change }, None) => {
                session = Some(
                    Session::start(w.model.clone(), w.traces.clone(), change, w.rules.clone())?.with_id(id.to_string()),
                );
            }
            (JournalEntry::Choice { choice }, Some(s)) => s.apply_choice(choice)?,
            _ => {
                return Err(ServiceError::Malformed(format!(
                    "{}:{}: a journal starts with one `start` entry followed by choices",
                    path.display(),
                    n + 1
                )))
            }
        }
    }
    session.ok_or_else(|| ServiceError::Malformed(format!("{}: empty journal", path.display())))
}
