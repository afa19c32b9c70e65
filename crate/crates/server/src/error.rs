use icon_core::corpus::CorpusError;
use icon_core::index::IndexError;
use icon_core::library::LibraryError;
use icon_core::linganalysis::{AnalysisError, DictionaryError};
use icon_core::ontology::{ConsistencyReport, OntologyError};
use serde_json::{json, Value};
use thiserror::Error;

use crate::project::{ProjectState, Stage};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("VALIDATION_ERROR: {0}")]
    Validation(String),
    #[error("AUTH_FAILED: {0}")]
    AuthFailed(String),
    #[error("UNKNOWN_PROJECT: {0}")]
    UnknownProject(String),
    #[error("INVALID_STATE: expected one of {expected:?}, project is {actual:?}")]
    InvalidState {
        expected: Vec<ProjectState>,
        actual: ProjectState,
    },
    #[error("PROJECT_BUSY: project {0} is running another operation")]
    ProjectBusy(String),
    #[error("PRECONDITION_FAILED: If-Match {stated:?} does not match current digest {current:?}")]
    PreconditionFailed { stated: String, current: String },
    #[error("NO_ONTOLOGY: project {0} has no ontology yet")]
    NoOntology(String),
    #[error("NOT_INDEXED: corpus {0} has no index")]
    NotIndexed(String),
    #[error("{stage} stage: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<ServiceError>,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error(transparent)]
    Library(#[from] LibraryError),
    #[error("INVALID_DICTIONARY: {0}")]
    Dictionary(#[from] DictionaryError),
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::Validation(_) => "VALIDATION_ERROR",
            ServiceError::AuthFailed(_) => "AUTH_FAILED",
            ServiceError::UnknownProject(_) => "UNKNOWN_PROJECT",
            ServiceError::InvalidState { .. } => "INVALID_STATE",
            ServiceError::ProjectBusy(_) => "PROJECT_BUSY",
            ServiceError::PreconditionFailed { .. } => "PRECONDITION_FAILED",
            ServiceError::NoOntology(_) => "NO_ONTOLOGY",
            ServiceError::NotIndexed(_) => "NOT_INDEXED",
            ServiceError::Stage { source, .. } => source.code(),
            ServiceError::Corpus(e) => e.code(),
            ServiceError::Index(e) => e.code(),
            ServiceError::Analysis(e) => e.code(),
            ServiceError::Ontology(e) => e.code(),
            ServiceError::Library(e) => e.code(),
            ServiceError::Dictionary(_) => "INVALID_DICTIONARY",
        }
    }

    /// The innermost error, looking through stage context.
    pub fn root(&self) -> &ServiceError {
        match self {
            ServiceError::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn in_stage(self, stage: Stage) -> ServiceError {
        match self {
            e @ (ServiceError::Stage { .. }
            | ServiceError::InvalidState { .. }
            | ServiceError::ProjectBusy(_)
            | ServiceError::UnknownProject(_)) => e,
            e => ServiceError::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    /// HTTP status for the error.
    pub fn status(&self) -> u16 {
        match self.code() {
            "VALIDATION_ERROR" | "EMPTY_QUERY" | "INVALID_QUERY" | "INVALID_KEY" | "INVALID_DICTIONARY" => 400,
            "AUTH_FAILED" => 401,
            "UNKNOWN_PROJECT" | "NOT_FOUND" | "UNKNOWN_DOCUMENT" | "UNKNOWN_CORPUS" | "NO_ONTOLOGY" => 404,
            "INVALID_STATE" | "PROJECT_BUSY" | "VERIFICATION_BLOCKED" | "NOT_INDEXED" | "STALE_INDEX"
            | "NO_INITIAL_ONTOLOGY" | "INCONSISTENT_INPUT" => 409,
            "PRECONDITION_FAILED" => 412,
            "STORAGE_UNAVAILABLE" | "SOURCE_UNAVAILABLE" => 503,
            "PROTOCOL_ERROR" | "BIND_FAILURE" | "MALFORMED_INDEX" => 500,
            _ => 422,
        }
    }

    /// JSON error body: `code`, `message` and error-specific details.
    pub fn to_json(&self) -> Value {
        let mut body = json!({ "code": self.code(), "message": self.to_string() });
        if let ServiceError::Stage { stage, .. } = self {
            body["stage"] = json!(stage);
        }
        match self.root() {
            ServiceError::InvalidState { expected, actual } => {
                body["expected"] = json!(expected);
                body["actual"] = json!(actual);
            }
            ServiceError::PreconditionFailed { current, .. } => body["current_digest"] = json!(current),
            ServiceError::Ontology(OntologyError::VerificationBlocked { report })
            | ServiceError::Ontology(OntologyError::InconsistentInput { report, .. }) => {
                body["report"] = report_json(report)
            }
            _ => {}
        }
        body
    }
}

fn report_json(report: &ConsistencyReport) -> Value {
    serde_json::to_value(report).unwrap_or(Value::Null)
}
