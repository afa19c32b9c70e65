use std::sync::atomic::{AtomicU64, Ordering};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;

use crate::project::{Counters, ProjectState};

/// A progress notification on the live event channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectEvent {
    pub seq: u64,
    pub project_id: String,
    pub timestamp: DateTime<Utc>,
    pub actor: String,
    pub event: String,
    pub detail: String,
    pub state: ProjectState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counters: Option<Counters>,
}

/// Fan-out of project events to any number of subscribers. Publishing never
/// blocks; slow subscribers lose old events.
#[derive(Debug)]
pub struct EventBus {
    tx: broadcast::Sender<ProjectEvent>,
    seq: AtomicU64,
}

impl EventBus {
    pub fn new(capacity: usize) -> EventBus {
        let (tx, _) = broadcast::channel(capacity);
        EventBus {
            tx,
            seq: AtomicU64::new(1),
        }
    }

    pub fn publish(
        &self,
        project_id: &str,
        actor: &str,
        event: &str,
        detail: String,
        state: ProjectState,
        counters: Option<Counters>,
    ) {
        let ev = ProjectEvent {
            seq: self.seq.fetch_add(1, Ordering::Relaxed),
            project_id: project_id.to_string(),
            timestamp: Utc::now(),
            actor: actor.to_string(),
            event: event.to_string(),
            detail,
            state,
            counters,
        };
        // no receivers is fine
        let _ = self.tx.send(ev);
    }

    pub fn subscribe(&self) -> broadcast::Receiver<ProjectEvent> {
        self.tx.subscribe()
    }
}

impl Default for EventBus {
    fn default() -> Self {
        EventBus::new(1024)
    }
}
