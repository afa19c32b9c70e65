//! Exhaustive exploration of action sequences against the transition model.
//!
//! Sequences that reach the same stored state with the same remaining depth
//! have identical futures, so each such subtree is explored once and its
//! sequence count reused.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use icon_core::library::{Library, MemoryBackend, Segment, Store};
use icon_core::ontology::Verdict;
use icon_server::error::ServiceError;
use icon_server::project::{is_transition, ProjectState, Stage};
use icon_server::service::{IngestRequest, Service, StageParams};

use super::{fixture_texts, service_over};

#[derive(Debug, Clone, Copy)]
pub enum Action {
    Run(Stage),
    Verify(Verdict),
}

pub fn actions() -> Vec<Action> {
    let mut a: Vec<Action> = Stage::ALL.iter().map(|s| Action::Run(*s)).collect();
    a.push(Action::Verify(Verdict::Approve));
    a.push(Action::Verify(Verdict::Reject));
    a
}

/// The model: admitted source states and the resulting state.
pub fn model(state: ProjectState, action: Action) -> Option<ProjectState> {
    match action {
        Action::Run(stage) => stage.admits().contains(&state).then(|| stage.target()),
        Action::Verify(v) => (state == ProjectState::UnderVerification).then_some(match v {
            Verdict::Approve => ProjectState::Verified,
            Verdict::Reject => ProjectState::Rejected,
        }),
    }
}

fn admitted(action: Action) -> Vec<ProjectState> {
    ProjectState::ALL
        .iter()
        .copied()
        .filter(|s| model(*s, action).is_some())
        .collect()
}

struct Explorer {
    lib: Arc<Library<MemoryBackend>>,
    service: Service,
    project: String,
    memo: HashMap<(String, usize), u64>,
    executed: u64,
}

impl Explorer {
    /// Project state, its artifact pointers and every non-project record.
    fn fingerprint(&self) -> String {
        let p = self.service.project(&self.project).unwrap();
        let mut parts = vec![p.state.to_string(), serde_json::to_string(&p.artifacts).unwrap()];
        for seg in Segment::ALL {
            if seg != Segment::Projects {
                parts.push(format!("{seg}:{:?}", self.lib.keys(seg).unwrap()));
            }
        }
        parts.join("|")
    }

    fn apply(&self, action: Action) -> Result<(), ServiceError> {
        match action {
            Action::Run(stage) => self
                .service
                .run_stage(&self.project, stage, &StageParams::default(), "tester")
                .map(drop),
            Action::Verify(v) => self.service.verify(&self.project, v, "reviewer", "").map(drop),
        }
    }

    /// Number of sequences of length `0..=remaining` from the current state.
    fn explore(&mut self, remaining: usize) -> u64 {
        let fp = self.fingerprint();
        if let Some(n) = self.memo.get(&(fp.clone(), remaining)) {
            return *n;
        }
        let mut total = 1;
        if remaining > 0 {
            let snapshot = self.lib.backend().snapshot();
            for action in actions() {
                self.lib.backend().restore(&snapshot);
                self.step(action, &fp);
                total += self.explore(remaining - 1);
            }
            self.lib.backend().restore(&snapshot);
        }
        self.memo.insert((fp, remaining), total);
        total
    }

    fn step(&mut self, action: Action, fp_before: &str) {
        self.executed += 1;
        let before = self.service.project(&self.project).unwrap();
        let expected = model(before.state, action);
        match (self.apply(action), expected) {
            (Ok(()), Some(next)) => {
                let after = self.service.project(&self.project).unwrap();
                assert_eq!(after.state, next, "{action:?} from {}", before.state);
                assert!(is_transition(before.state, after.state));
                assert_eq!(after.event_log.len(), before.event_log.len() + 1);
                let view = self.service.progress(&self.project).unwrap();
                assert_eq!(view.state, next);
                let has_graph = !matches!(
                    next,
                    ProjectState::New | ProjectState::CorpusReady | ProjectState::Indexed | ProjectState::Analyzed
                );
                assert_eq!(view.counters.nodes > 0, has_graph, "{next}: {:?}", view.counters);
                assert_eq!(view.counters.terms > 0, next != ProjectState::New && next != ProjectState::CorpusReady && next != ProjectState::Indexed);
            }
            (Err(ServiceError::InvalidState { expected, actual }), None) => {
                assert_eq!(actual, before.state);
                assert_eq!(expected, admitted(action), "{action:?}");
                assert_eq!(self.fingerprint(), fp_before, "rejected {action:?} changed the store");
                assert_eq!(self.service.project(&self.project).unwrap(), before);
            }
            (r, e) => panic!("{action:?} from {}: got {r:?}, model says {e:?}", before.state),
        }
    }
}

pub struct Exploration {
    pub sequences: u64,
    pub expected_sequences: u64,
    pub executed: u64,
    pub states_reached: BTreeSet<String>,
}

/// Check every sequence of up to `max_len` actions on a project over three
/// fixture documents. Panics on the first divergence from the model.
pub fn explore_all(max_len: usize) -> Exploration {
    let lib = Arc::new(Library::in_memory());
    let store: Arc<dyn Store> = lib.clone();
    let service = service_over(store);
    for (name, text) in fixture_texts().into_iter().take(3) {
        service
            .ingest(&IngestRequest {
                text: Some(text),
                uri: Some(name),
                ..Default::default()
            })
            .unwrap();
    }
    let project = service.create_project("sm", None, "tester").unwrap().id;
    let mut ex = Explorer {
        lib,
        service,
        project,
        memo: HashMap::new(),
        executed: 0,
    };
    let sequences = ex.explore(max_len);
    let n = actions().len() as u64;
    Exploration {
        sequences,
        expected_sequences: (0..=max_len as u32).map(|k| n.pow(k)).sum(),
        executed: ex.executed,
        states_reached: ex
            .memo
            .keys()
            .map(|(fp, _)| fp.split('|').next().unwrap().to_string())
            .collect(),
    }
}
