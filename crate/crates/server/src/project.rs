use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use icon_core::ontology::AuditRecord;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProjectState {
    New,
    CorpusReady,
    Indexed,
    Analyzed,
    DraftOntology,
    UnderVerification,
    Verified,
    Rejected,
}

use ProjectState::*;

impl ProjectState {
    pub const ALL: [ProjectState; 8] = [
        New,
        CorpusReady,
        Indexed,
        Analyzed,
        DraftOntology,
        UnderVerification,
        Verified,
        Rejected,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            New => "NEW",
            CorpusReady => "CORPUS_READY",
            Indexed => "INDEXED",
            Analyzed => "ANALYZED",
            DraftOntology => "DRAFT_ONTOLOGY",
            UnderVerification => "UNDER_VERIFICATION",
            Verified => "VERIFIED",
            Rejected => "REJECTED",
        }
    }
}

impl fmt::Display for ProjectState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The declared transition relation. Every state change the service makes
/// is one of these pairs.
pub const TRANSITIONS: [(ProjectState, ProjectState); 8] = [
    (New, CorpusReady),
    (CorpusReady, Indexed),
    (Indexed, Analyzed),
    (Analyzed, DraftOntology),
    (DraftOntology, UnderVerification),
    (UnderVerification, Verified),
    (UnderVerification, Rejected),
    (Rejected, Analyzed),
];

pub fn is_transition(from: ProjectState, to: ProjectState) -> bool {
    TRANSITIONS.contains(&(from, to))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Corpus,
    Index,
    Analyze,
    Build,
    SubmitVerification,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Corpus,
        Stage::Index,
        Stage::Analyze,
        Stage::Build,
        Stage::SubmitVerification,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Corpus => "corpus",
            Stage::Index => "index",
            Stage::Analyze => "analyze",
            Stage::Build => "build",
            Stage::SubmitVerification => "submit_verification",
        }
    }

    /// States from which the stage may run. `analyze` also accepts a
    /// rejected project, which is how rework starts.
    pub fn admits(self) -> &'static [ProjectState] {
        match self {
            Stage::Corpus => &[New],
            Stage::Index => &[CorpusReady],
            Stage::Analyze => &[Indexed, Rejected],
            Stage::Build => &[Analyzed],
            Stage::SubmitVerification => &[DraftOntology],
        }
    }

    pub fn target(self) -> ProjectState {
        match self {
            Stage::Corpus => CorpusReady,
            Stage::Index => Indexed,
            Stage::Analyze => Analyzed,
            Stage::Build => DraftOntology,
            Stage::SubmitVerification => UnderVerification,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub timestamp: DateTime<Utc>,
    pub actor: String,
    pub event: String,
    pub detail: String,
}

/// Persisted project record. The only mutable record of a run: stage
/// outputs are content-addressed and never overwritten with different
/// content, and `artifacts` points at the ones currently in effect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Project {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub corpus_id: Option<String>,
    pub state: ProjectState,
    /// Stage -> `segment/key` references of its outputs.
    #[serde(default)]
    pub artifacts: BTreeMap<String, Vec<String>>,
    /// Key of the project's own initial ontology in the ontologies segment.
    #[serde(default)]
    pub initial_ontology: Option<String>,
    #[serde(default)]
    pub audit: Vec<AuditRecord>,
    pub event_log: Vec<EventRecord>,
}

impl Project {
    pub fn artifact(&self, stage: &str, segment: &str) -> Option<&str> {
        let prefix = format!("{segment}/");
        self.artifacts
            .get(stage)?
            .iter()
            .find_map(|r| r.strip_prefix(&prefix))
    }

    pub fn last_event(&self) -> Option<&EventRecord> {
        self.event_log.last()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub docs: usize,
    pub terms: usize,
    pub concepts: usize,
    pub relations: usize,
    pub nodes: usize,
    pub edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressView {
    pub project_id: String,
    pub state: ProjectState,
    pub counters: Counters,
    pub last_event: Option<EventRecord>,
}
