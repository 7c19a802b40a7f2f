//! In-memory elicitation sessions.
//!
//! A session keeps the model it was created from plus the list of
//! mutations applied since. Undo drops the last applied mutation and
//! rebuilds the model by replaying the rest, so the current model is always
//! the replay of the base. Writers are serialized per session; readers take
//! the last committed snapshot without waiting for them.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use tokio::sync::Mutex;

use voi_core::confidence::CoherenceWarning;
use voi_core::DecisionModel;
use voi_protocol::{HistoryEntry, Operation, SessionInfo};

use crate::error::ApiError;

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub revision: u64,
    pub model: Arc<DecisionModel>,
}

#[derive(Default)]
struct Log {
    /// Mutations currently in effect, oldest first (undo removes them).
    applied: Vec<Operation>,
    /// Every committed mutation including undos.
    history: Vec<HistoryEntry>,
}

pub struct Session {
    id: String,
    base: DecisionModel,
    log: Mutex<Log>,
    committed: RwLock<Snapshot>,
}

pub struct Mutation {
    pub revision: u64,
    pub warnings: Vec<CoherenceWarning>,
}

fn apply(model: &DecisionModel, op: &Operation) -> voi_core::Result<(DecisionModel, Option<CoherenceWarning>)> {
    match op {
        Operation::Refine { target, extension } => Ok((extension.clone().apply(model, target)?, None)),
        Operation::Annotate { annotation } => annotation.clone().apply(model),
        Operation::Undo => unreachable!("undo is not replayed"),
    }
}

impl Session {
    fn new(id: String, model: DecisionModel) -> Self {
        Session {
            id,
            committed: RwLock::new(Snapshot {
                revision: 0,
                model: Arc::new(model.clone()),
            }),
            base: model,
            log: Mutex::new(Log::default()),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn snapshot(&self) -> Snapshot {
        self.committed.read().expect("snapshot lock").clone()
    }

    pub async fn info(&self) -> SessionInfo {
        let log = self.log.lock().await;
        SessionInfo {
            id: self.id.clone(),
            revision: self.snapshot().revision,
            history: log.history.clone(),
        }
    }

    /// Applies `op` (a refine or annotation) if `expected` matches the
    /// current revision.
    pub async fn mutate(&self, op: Operation, expected: Option<u64>) -> Result<Mutation, ApiError> {
        let mut log = self.log.lock().await;
        let current = self.check_revision(expected)?;
        let (model, warning) = apply(&current.model, &op)?;
        log.applied.push(op.clone());
        Ok(self.commit(&mut log, current.revision, model, op, warning.into_iter().collect()))
    }

    pub async fn undo(&self, expected: Option<u64>) -> Result<Mutation, ApiError> {
        let mut log = self.log.lock().await;
        let current = self.check_revision(expected)?;
        if log.applied.is_empty() {
            return Err(ApiError::bad_request("nothing to undo"));
        }
        log.applied.pop();
        let model = replay(&self.base, &log.applied)?;
        Ok(self.commit(&mut log, current.revision, model, Operation::Undo, Vec::new()))
    }

    /// Rebuilds the current model from the base and the applied mutations.
    pub async fn replay(&self) -> voi_core::Result<DecisionModel> {
        let log = self.log.lock().await;
        replay(&self.base, &log.applied)
    }

    fn check_revision(&self, expected: Option<u64>) -> Result<Snapshot, ApiError> {
        let current = self.snapshot();
        match expected {
            Some(e) if e != current.revision => Err(ApiError::stale(e, current.revision)),
            _ => Ok(current),
        }
    }

    fn commit(
        &self,
        log: &mut Log,
        previous: u64,
        model: DecisionModel,
        op: Operation,
        warnings: Vec<CoherenceWarning>,
    ) -> Mutation {
        let revision = previous + 1;
        log.history.push(HistoryEntry {
            revision,
            operation: op,
        });
        *self.committed.write().expect("snapshot lock") = Snapshot {
            revision,
            model: Arc::new(model),
        };
        Mutation { revision, warnings }
    }
}

fn replay(base: &DecisionModel, ops: &[Operation]) -> voi_core::Result<DecisionModel> {
    ops.iter().try_fold(base.clone(), |model, op| Ok(apply(&model, op)?.0))
}

#[derive(Default)]
pub struct Sessions {
    by_id: RwLock<HashMap<String, Arc<Session>>>,
}

impl Sessions {
    pub fn create(&self, model: DecisionModel) -> Arc<Session> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let session = Arc::new(Session::new(id.clone(), model));
        self.by_id.write().expect("session table").insert(id, session.clone());
        session
    }

    pub fn get(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.by_id
            .read()
            .expect("session table")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_session(id))
    }
}
