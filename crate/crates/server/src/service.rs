//! The pipeline service: projects, stages, verification and the document
//! library, over any [`Store`]. Everything here is synchronous; the HTTP
//! layer runs it on blocking threads.

use std::collections::BTreeSet;
use std::sync::{Arc, RwLock};
use std::time::Duration;

use base64::Engine;
use chrono::Utc;
use icon_core::corpus::{
    build_corpus, ingest_document, load_corpus, load_documents, read_source, search_external, Document, Language,
    SourceConfig, SourceDescriptor, TextEncoding,
};
use icon_core::digest::sha256_parts;
use icon_core::index::{index_stored_corpus, load_index, query_index, QueryMode};
use icon_core::library::{LibraryError, Segment, Store, StoreExt};
use icon_core::linganalysis::{
    extract_relations, extract_terms, form_concepts, AnalysisConfig, Analyzer, Concept, Dictionary, Relation, Term,
    Thesaurus,
};
use icon_core::ontology::{
    analyze_interpretation_completeness, bind_to_initial, build_document_ontograph, check_consistency,
    load_initial_ontology, merge_ontographs, submit_for_verification, verify_ontograph, AuditRecord,
    ExchangeDocument, FindingKind, MergeContext, Ontograph, Ontology, Status, Verdict,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Result, ServiceError};
use crate::events::EventBus;
use crate::lease::LeaseTable;
use crate::project::{is_transition, Counters, EventRecord, ProgressView, Project, ProjectState, Stage};

pub const SYSTEM_ACTOR: &str = "system";

#[derive(Debug, Clone)]
pub struct ServiceOptions {
    pub analysis: AnalysisConfig,
    pub lease_ttl: Duration,
    pub sources: Option<SourceConfig>,
    /// Exchange JSON of the initial ontology used by projects without one.
    pub default_initial_ontology: Option<String>,
}

impl Default for ServiceOptions {
    fn default() -> Self {
        ServiceOptions {
            analysis: AnalysisConfig::default(),
            lease_ttl: Duration::from_secs(600),
            sources: None,
            default_initial_ontology: None,
        }
    }
}

/// Optional inputs of a stage run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageParams {
    /// Documents for the `corpus` stage; all stored documents when absent.
    #[serde(default)]
    pub documents: Option<Vec<String>>,
    #[serde(default)]
    pub corpus_name: Option<String>,
}

/// One document to ingest: inline text, base64 bytes, or a query against
/// the configured external sources.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestRequest {
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub content_base64: Option<String>,
    #[serde(default)]
    pub encoding: Option<TextEncoding>,
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default)]
    pub uri: Option<String>,
    #[serde(default)]
    pub source_query: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentSummary {
    pub id: String,
    pub title: String,
    pub language: Language,
    pub source: String,
    pub chars: usize,
}

impl From<&Document> for DocumentSummary {
    fn from(d: &Document) -> Self {
        DocumentSummary {
            id: d.id.clone(),
            title: d.title.clone(),
            language: d.language,
            source: d.source.clone(),
            chars: d.text.chars().count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionarySummary {
    pub id: String,
    pub source_kind: String,
    pub entries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub doc_id: String,
    pub title: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSet {
    pub corpus_id: String,
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptSet {
    pub corpus_id: String,
    pub concepts: Vec<Concept>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationSet {
    pub corpus_id: String,
    pub relations: Vec<Relation>,
}

type StageHook = Arc<dyn Fn(&str, Stage) + Send + Sync>;

pub struct Service {
    store: Arc<dyn Store>,
    analyzer: Analyzer,
    options: ServiceOptions,
    leases: LeaseTable,
    events: EventBus,
    stage_hook: RwLock<Option<StageHook>>,
}

fn artifact_ref(segment: Segment, key: &str) -> String {
    format!("{segment}/{key}")
}

fn validate_id(id: &str) -> Result<()> {
    let ok = !id.is_empty() && id.len() <= 128 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_');
    if ok {
        Ok(())
    } else {
        Err(ServiceError::Validation(format!("malformed id {id:?}")))
    }
}

impl Service {
    pub fn new(store: Arc<dyn Store>, options: ServiceOptions) -> Service {
        Service {
            store,
            analyzer: Analyzer::builtin(),
            leases: LeaseTable::new(options.lease_ttl),
            options,
            events: EventBus::default(),
            stage_hook: RwLock::new(None),
        }
    }

    pub fn store(&self) -> &Arc<dyn Store> {
        &self.store
    }

    pub fn analyzer(&self) -> &Analyzer {
        &self.analyzer
    }

    pub fn events(&self) -> &EventBus {
        &self.events
    }

    pub fn leases(&self) -> &LeaseTable {
        &self.leases
    }

    /// Called with the project id once a stage holds its lease and has
    /// passed the state check, before any work is done.
    pub fn set_stage_hook(&self, hook: Option<StageHook>) {
        *self.stage_hook.write().expect("hook lock poisoned") = hook;
    }

    // -----------------------------------------------------------------
    // dictionaries

    pub fn put_dictionary(&self, dict: &Dictionary) -> Result<()> {
        self.store.put_json(Segment::Dictionaries, &dict.id, dict)?;
        Ok(())
    }

    pub fn dictionaries(&self) -> Result<Vec<Dictionary>> {
        self.store
            .keys(Segment::Dictionaries)?
            .iter()
            .map(|k| Ok(self.store.get_json::<Dictionary>(Segment::Dictionaries, k)?))
            .collect()
    }

    pub fn dictionary_summaries(&self) -> Result<Vec<DictionarySummary>> {
        Ok(self
            .dictionaries()?
            .iter()
            .map(|d| DictionarySummary {
                id: d.id.clone(),
                source_kind: serde_json::to_value(d.source_kind)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default(),
                entries: d.entries.len(),
            })
            .collect())
    }

    fn normalized_dictionaries(&self) -> Result<(Vec<Dictionary>, String)> {
        let raw = self.dictionaries()?;
        let digest = sha256_parts(
            raw.iter()
                .map(|d| serde_json::to_string(d).expect("dictionary serializes")),
        );
        Ok((raw.iter().map(|d| d.normalized(&self.analyzer)).collect(), digest))
    }

    // -----------------------------------------------------------------
    // documents and search

    pub fn ingest(&self, req: &IngestRequest) -> Result<Vec<DocumentSummary>> {
        if let Some(query) = &req.source_query {
            let sources = self
                .options
                .sources
                .as_ref()
                .ok_or_else(|| ServiceError::Validation("no external sources configured".into()))?;
            let mut out = Vec::new();
            for desc in search_external(sources, query)? {
                let bytes = read_source(&desc)?;
                out.push(DocumentSummary::from(&ingest_document(
                    self.store.as_ref(),
                    &bytes,
                    &desc,
                    &self.analyzer,
                )?));
            }
            return Ok(out);
        }
        let bytes = match (&req.text, &req.content_base64) {
            (Some(t), None) => t.clone().into_bytes(),
            (None, Some(b)) => base64::engine::general_purpose::STANDARD
                .decode(b)
                .map_err(|e| ServiceError::Validation(format!("content_base64: {e}")))?,
            _ => {
                return Err(ServiceError::Validation(
                    "exactly one of text, content_base64 or source_query is required".into(),
                ))
            }
        };
        let source = SourceDescriptor {
            uri: req.uri.clone().unwrap_or_else(|| "inline".into()),
            title: req.title.clone().unwrap_or_default(),
            size: bytes.len() as u64,
            encoding: req.encoding.unwrap_or_default(),
        };
        let doc = ingest_document(self.store.as_ref(), &bytes, &source, &self.analyzer)?;
        Ok(vec![DocumentSummary::from(&doc)])
    }

    pub fn documents(&self) -> Result<Vec<DocumentSummary>> {
        self.store
            .keys(Segment::Documents)?
            .iter()
            .map(|k| Ok(DocumentSummary::from(&self.store.get_json::<Document>(Segment::Documents, k)?)))
            .collect()
    }

    pub fn search(&self, corpus_id: &str, query: &str, mode: QueryMode) -> Result<Vec<SearchHit>> {
        validate_id(corpus_id)?;
        load_corpus(self.store.as_ref(), corpus_id)?;
        let index = load_index(self.store.as_ref(), corpus_id)?
            .ok_or_else(|| ServiceError::NotIndexed(corpus_id.to_string()))?;
        let hits = query_index(&index, &self.analyzer, query, mode)?;
        hits.into_iter()
            .map(|h| {
                let doc: Document = self.store.get_json(Segment::Documents, &h.doc_id)?;
                Ok(SearchHit {
                    doc_id: h.doc_id,
                    title: doc.title,
                    score: h.score,
                })
            })
            .collect()
    }

    // -----------------------------------------------------------------
    // projects

    pub fn create_project(&self, name: &str, initial_ontology: Option<&str>, actor: &str) -> Result<Project> {
        let name = name.trim();
        if name.is_empty() {
            return Err(ServiceError::Validation("project name must not be empty".into()));
        }
        let initial = match initial_ontology {
            Some(json) => {
                let ontology = Ontology::from_exchange_json(json)?;
                Some(self.save_ontology_record(&ontology)?)
            }
            None => None,
        };
        let id = uuid::Uuid::new_v4().simple().to_string();
        let project = Project {
            id: id.clone(),
            name: name.to_string(),
            corpus_id: None,
            state: ProjectState::New,
            artifacts: Default::default(),
            initial_ontology: initial,
            audit: Vec::new(),
            event_log: vec![EventRecord {
                timestamp: Utc::now(),
                actor: actor.to_string(),
                event: "project_created".into(),
                detail: name.to_string(),
            }],
        };
        self.store.put_json(Segment::Projects, &id, &project)?;
        self.events
            .publish(&id, actor, "project_created", name.to_string(), project.state, None);
        Ok(project)
    }

    pub fn project(&self, id: &str) -> Result<Project> {
        validate_id(id)?;
        match self.store.get_json(Segment::Projects, id) {
            Ok(p) => Ok(p),
            Err(LibraryError::NotFound { .. }) => Err(ServiceError::UnknownProject(id.to_string())),
            Err(e) => Err(e.into()),
        }
    }

    pub fn projects(&self) -> Result<Vec<Project>> {
        self.store
            .keys(Segment::Projects)?
            .iter()
            .map(|k| Ok(self.store.get_json(Segment::Projects, k)?))
            .collect()
    }

    fn commit(&self, project: &Project) -> Result<()> {
        self.store.put_json(Segment::Projects, &project.id, project)?;
        Ok(())
    }

    fn log(&self, project: &mut Project, actor: &str, event: &str, detail: String) {
        project.event_log.push(EventRecord {
            timestamp: Utc::now(),
            actor: actor.to_string(),
            event: event.to_string(),
            detail,
        });
    }

    /// Counters recomputed from the artifacts the project points at.
    pub fn progress(&self, id: &str) -> Result<ProgressView> {
        let project = self.project(id)?;
        self.progress_of(&project)
    }

    fn progress_of(&self, project: &Project) -> Result<ProgressView> {
        let mut c = Counters::default();
        if let Some(corpus) = project.artifact("corpus", Segment::Corpora.as_str()) {
            c.docs = load_corpus(self.store.as_ref(), corpus)?.doc_ids.len();
        }
        if let Some(k) = project.artifact("analyze", Segment::Termsets.as_str()) {
            c.terms = self.store.get_json::<TermSet>(Segment::Termsets, k)?.terms.len();
        }
        if let Some(k) = project.artifact("analyze", Segment::Conceptsets.as_str()) {
            c.concepts = self.store.get_json::<ConceptSet>(Segment::Conceptsets, k)?.concepts.len();
        }
        if let Some(k) = project.artifact("analyze", Segment::Relationsets.as_str()) {
            c.relations = self.store.get_json::<RelationSet>(Segment::Relationsets, k)?.relations.len();
        }
        if let Some(o) = self.current_ontology_of(project)? {
            c.nodes = o.ontograph.nodes.len();
            c.edges = o.ontograph.edges.len();
        }
        Ok(ProgressView {
            project_id: project.id.clone(),
            state: project.state,
            counters: c,
            last_event: project.last_event().cloned(),
        })
    }

    // -----------------------------------------------------------------
    // stage runs

    pub fn run_stage(&self, id: &str, stage: Stage, params: &StageParams, actor: &str) -> Result<ProgressView> {
        self.project(id)?;
        let _lease = self.leases.acquire(id)?;
        // re-read under the lease: another writer may have finished meanwhile
        let mut project = self.project(id)?;
        if !stage.admits().contains(&project.state) {
            return Err(ServiceError::InvalidState {
                expected: stage.admits().to_vec(),
                actual: project.state,
            });
        }
        if let Some(hook) = self.stage_hook.read().expect("hook lock poisoned").clone() {
            hook(id, stage);
        }
        self.events
            .publish(id, actor, "stage_started", stage.to_string(), project.state, None);
        tracing::info!(project = id, %stage, "stage started");

        let from = project.state;
        let outcome = match stage {
            Stage::Corpus => self.stage_corpus(&mut project, params),
            Stage::Index => self.stage_index(&mut project),
            Stage::Analyze => self.stage_analyze(&mut project, actor),
            Stage::Build => self.stage_build(&mut project, actor),
            Stage::SubmitVerification => self.stage_submit(&mut project),
        };
        let detail = match outcome {
            Ok(detail) => detail,
            Err(e) => {
                let e = e.in_stage(stage);
                tracing::warn!(project = id, %stage, "stage failed: {e}");
                // failure leaves the state alone but is recorded
                let mut failed = self.project(id)?;
                self.log(&mut failed, actor, "stage_failed", format!("{stage}: {e}"));
                self.commit(&failed)?;
                self.events
                    .publish(id, actor, "stage_failed", e.to_string(), failed.state, None);
                return Err(e);
            }
        };
        project.state = stage.target();
        debug_assert!(is_transition(from, project.state));
        self.log(&mut project, actor, "stage_completed", format!("{stage}: {detail}"));
        self.commit(&project)?;
        let view = self.progress_of(&project)?;
        self.events.publish(
            id,
            actor,
            "stage_completed",
            stage.to_string(),
            project.state,
            Some(view.counters),
        );
        tracing::info!(project = id, %stage, state = %project.state, "stage completed");
        Ok(view)
    }

    fn stage_corpus(&self, project: &mut Project, params: &StageParams) -> Result<String> {
        let selection = match &params.documents {
            Some(ids) => {
                for id in ids {
                    validate_id(id)?;
                }
                ids.clone()
            }
            None => self.store.keys(Segment::Documents)?,
        };
        let name = params.corpus_name.as_deref().unwrap_or(&project.name);
        let corpus = build_corpus(self.store.as_ref(), name, &selection)?;
        project.corpus_id = Some(corpus.id.clone());
        project
            .artifacts
            .insert("corpus".into(), vec![artifact_ref(Segment::Corpora, &corpus.id)]);
        Ok(format!("{} documents", corpus.doc_ids.len()))
    }

    fn corpus_id(project: &Project) -> Result<&str> {
        project
            .corpus_id
            .as_deref()
            .ok_or_else(|| ServiceError::Validation("project has no corpus".into()))
    }

    fn stage_index(&self, project: &mut Project) -> Result<String> {
        let corpus_id = Self::corpus_id(project)?.to_string();
        let index = index_stored_corpus(self.store.as_ref(), &corpus_id, &self.analyzer)?;
        project
            .artifacts
            .insert("index".into(), vec![artifact_ref(Segment::Indexes, &corpus_id)]);
        Ok(format!("{} lemmas, version {}", index.entries.len(), index.version))
    }

    fn stage_analyze(&self, project: &mut Project, actor: &str) -> Result<String> {
        let corpus_id = Self::corpus_id(project)?.to_string();
        let store = self.store.as_ref();
        let corpus = load_corpus(store, &corpus_id)?;
        let docs = load_documents(store, &corpus)?;
        let index = load_index(store, &corpus_id)?.ok_or_else(|| ServiceError::NotIndexed(corpus_id.clone()))?;
        let config = &self.options.analysis;
        let config_json = serde_json::to_string(config).expect("config serializes");
        let (dicts, dict_digest) = self.normalized_dictionaries()?;

        let mut counters = Counters {
            docs: docs.len(),
            ..Default::default()
        };
        let terms = extract_terms(&corpus, &docs, &index, &self.analyzer, config)?;
        counters.terms = terms.len();
        self.events
            .publish(&project.id, actor, "terms_extracted", String::new(), project.state, Some(counters));
        let concepts = form_concepts(&terms, &dicts);
        counters.concepts = concepts.len();
        self.events
            .publish(&project.id, actor, "concepts_formed", String::new(), project.state, Some(counters));
        let relations = extract_relations(&docs, &concepts, &self.analyzer, config);
        counters.relations = relations.len();
        self.events
            .publish(&project.id, actor, "relations_extracted", String::new(), project.state, Some(counters));

        let term_key = sha256_parts([
            "termset/1",
            &corpus_id,
            &index.digest(),
            self.analyzer.digest(),
            &config_json,
        ]);
        let concept_key = sha256_parts(["conceptset/1", &term_key, &dict_digest]);
        let relation_key = sha256_parts(["relationset/1", &concept_key, &config_json]);
        store.put_json(
            Segment::Termsets,
            &term_key,
            &TermSet {
                corpus_id: corpus_id.clone(),
                terms,
            },
        )?;
        store.put_json(
            Segment::Conceptsets,
            &concept_key,
            &ConceptSet {
                corpus_id: corpus_id.clone(),
                concepts,
            },
        )?;
        store.put_json(
            Segment::Relationsets,
            &relation_key,
            &RelationSet {
                corpus_id,
                relations,
            },
        )?;
        project.artifacts.insert(
            "analyze".into(),
            vec![
                artifact_ref(Segment::Termsets, &term_key),
                artifact_ref(Segment::Conceptsets, &concept_key),
                artifact_ref(Segment::Relationsets, &relation_key),
            ],
        );
        // a rework run supersedes the old draft
        for stage in ["build", "submit_verification", "verify"] {
            project.artifacts.remove(stage);
        }
        Ok(format!(
            "{} terms, {} concepts, {} relations",
            counters.terms, counters.concepts, counters.relations
        ))
    }

    fn initial_ontology_of(&self, project: &Project, dicts: &[Dictionary]) -> Result<Ontology> {
        let graph: Option<Ontograph> = match &project.initial_ontology {
            Some(key) => Some(self.load_ontology_record(key)?.ontograph),
            None => match &self.options.default_initial_ontology {
                Some(json) => Some(Ontology::from_exchange_json(json)?.ontograph),
                None => None,
            },
        };
        Ok(load_initial_ontology(graph.as_ref(), dicts, &self.analyzer)?)
    }

    fn stage_build(&self, project: &mut Project, actor: &str) -> Result<String> {
        let corpus_id = Self::corpus_id(project)?.to_string();
        let store = self.store.as_ref();
        let corpus = load_corpus(store, &corpus_id)?;
        let missing = |what: &str| ServiceError::Validation(format!("project has no {what}; run analyze first"));
        let concepts = store
            .get_json::<ConceptSet>(
                Segment::Conceptsets,
                project
                    .artifact("analyze", Segment::Conceptsets.as_str())
                    .ok_or_else(|| missing("concepts"))?,
            )?
            .concepts;
        let relations = store
            .get_json::<RelationSet>(
                Segment::Relationsets,
                project
                    .artifact("analyze", Segment::Relationsets.as_str())
                    .ok_or_else(|| missing("relations"))?,
            )?
            .relations;
        let (dicts, _) = self.normalized_dictionaries()?;
        let initial = self.initial_ontology_of(project, &dicts)?;

        let mut graphs = Vec::with_capacity(corpus.doc_ids.len());
        let mut repaired = 0;
        for doc_id in &corpus.doc_ids {
            let mut g = build_document_ontograph(doc_id, &corpus, &concepts, &relations)?;
            if repair_document_graph(&mut g) {
                repaired += 1;
                self.events.publish(
                    &project.id,
                    actor,
                    "document_graph_repaired",
                    doc_id.clone(),
                    project.state,
                    None,
                );
            }
            graphs.push(g);
        }
        let thesaurus = Thesaurus::from_dictionaries(&dicts);
        let ctx = MergeContext {
            analyzer: &self.analyzer,
            thesaurus: &thesaurus,
        };
        let merged = merge_ontographs(&graphs, &ctx)?;
        let bound = bind_to_initial(&merged.graph, &initial, &ctx);
        let (ontology, completeness) = analyze_interpretation_completeness(&bound.ontology, &dicts, &self.analyzer);
        let key = self.save_ontology_record(&ontology)?;
        project
            .artifacts
            .insert("build".into(), vec![artifact_ref(Segment::Ontologies, &key)]);
        project.artifacts.remove("submit_verification");
        project.artifacts.remove("verify");
        Ok(format!(
            "{} nodes, {} edges, {} merge flags, {} components, {} repaired document graphs, {} undefined concepts",
            ontology.ontograph.nodes.len(),
            ontology.ontograph.edges.len(),
            merged.flags.len() + bound.flags.len(),
            bound.components.len().max(1),
            repaired,
            completeness.missing.len()
        ))
    }

    fn stage_submit(&self, project: &mut Project) -> Result<String> {
        let current = self
            .current_ontology_of(project)?
            .ok_or_else(|| ServiceError::NoOntology(project.id.clone()))?;
        let submitted = submit_for_verification(&current)?;
        let key = self.save_ontology_record(&submitted)?;
        project
            .artifacts
            .insert("submit_verification".into(), vec![artifact_ref(Segment::Ontologies, &key)]);
        Ok(format!("ontology {key}"))
    }

    // -----------------------------------------------------------------
    // ontology records

    fn save_ontology_record(&self, ontology: &Ontology) -> Result<String> {
        let doc = ExchangeDocument::from_ontology(ontology);
        self.store.put_json(Segment::Ontologies, &doc.digest, &doc)?;
        Ok(doc.digest)
    }

    fn load_ontology_record(&self, key: &str) -> Result<Ontology> {
        let doc: ExchangeDocument = self.store.get_json(Segment::Ontologies, key)?;
        Ok(doc.into_ontology()?)
    }

    /// The ontology of the latest stage that produced one.
    fn current_ontology_of(&self, project: &Project) -> Result<Option<Ontology>> {
        for stage in ["verify", "submit_verification", "build"] {
            if let Some(key) = project.artifact(stage, Segment::Ontologies.as_str()) {
                return self.load_ontology_record(key).map(Some);
            }
        }
        Ok(None)
    }

    pub fn ontology(&self, id: &str) -> Result<Ontology> {
        let project = self.project(id)?;
        self.current_ontology_of(&project)?
            .ok_or_else(|| ServiceError::NoOntology(id.to_string()))
    }

    /// Replace the draft with an edited exchange document. `if_match` must
    /// be the digest of the draft being replaced.
    pub fn save_ontology(&self, id: &str, json: &str, if_match: &str, actor: &str) -> Result<String> {
        self.project(id)?;
        let _lease = self.leases.acquire(id)?;
        let mut project = self.project(id)?;
        if project.state != ProjectState::DraftOntology {
            return Err(ServiceError::InvalidState {
                expected: vec![ProjectState::DraftOntology],
                actual: project.state,
            });
        }
        let current = self
            .current_ontology_of(&project)?
            .ok_or_else(|| ServiceError::NoOntology(id.to_string()))?
            .digest();
        let stated = if_match.trim().trim_matches('"');
        if stated != current {
            return Err(ServiceError::PreconditionFailed {
                stated: stated.to_string(),
                current,
            });
        }
        let ontology = Ontology::from_exchange_json(json)?;
        if ontology.status != Status::Draft {
            return Err(ServiceError::Validation(format!(
                "a saved draft must have status draft, not {}",
                ontology.status
            )));
        }
        let key = self.save_ontology_record(&ontology)?;
        project
            .artifacts
            .insert("build".into(), vec![artifact_ref(Segment::Ontologies, &key)]);
        self.log(&mut project, actor, "ontology_saved", key.clone());
        self.commit(&project)?;
        self.events
            .publish(id, actor, "ontology_saved", key.clone(), project.state, None);
        Ok(key)
    }

    // -----------------------------------------------------------------
    // verification

    pub fn verify(&self, id: &str, verdict: Verdict, actor: &str, comment: &str) -> Result<(ProgressView, AuditRecord)> {
        self.project(id)?;
        let _lease = self.leases.acquire(id)?;
        let mut project = self.project(id)?;
        if project.state != ProjectState::UnderVerification {
            return Err(ServiceError::InvalidState {
                expected: vec![ProjectState::UnderVerification],
                actual: project.state,
            });
        }
        let current = self
            .current_ontology_of(&project)?
            .ok_or_else(|| ServiceError::NoOntology(id.to_string()))?;
        let (ontology, audit) = verify_ontograph(&current, verdict, actor, comment)?;
        let key = self.save_ontology_record(&ontology)?;
        let from = project.state;
        project.state = match verdict {
            Verdict::Approve => ProjectState::Verified,
            Verdict::Reject => ProjectState::Rejected,
        };
        debug_assert!(is_transition(from, project.state));
        project
            .artifacts
            .insert("verify".into(), vec![artifact_ref(Segment::Ontologies, &key)]);
        let event = match verdict {
            Verdict::Approve => "verified",
            Verdict::Reject => "rejected",
        };
        self.log(&mut project, actor, event, comment.to_string());
        project.audit.push(audit.clone());
        self.commit(&project)?;
        self.events
            .publish(id, actor, event, comment.to_string(), project.state, None);
        Ok((self.progress_of(&project)?, audit))
    }

    // -----------------------------------------------------------------
    // artifacts for presentation

    pub fn terms(&self, id: &str) -> Result<Vec<Term>> {
        let project = self.project(id)?;
        match project.artifact("analyze", Segment::Termsets.as_str()) {
            Some(k) => Ok(self.store.get_json::<TermSet>(Segment::Termsets, k)?.terms),
            None => Ok(Vec::new()),
        }
    }

    pub fn concepts(&self, id: &str) -> Result<Vec<Concept>> {
        let project = self.project(id)?;
        match project.artifact("analyze", Segment::Conceptsets.as_str()) {
            Some(k) => Ok(self.store.get_json::<ConceptSet>(Segment::Conceptsets, k)?.concepts),
            None => Ok(Vec::new()),
        }
    }

    pub fn relations(&self, id: &str) -> Result<Vec<Relation>> {
        let project = self.project(id)?;
        match project.artifact("analyze", Segment::Relationsets.as_str()) {
            Some(k) => Ok(self.store.get_json::<RelationSet>(Segment::Relationsets, k)?.relations),
            None => Ok(Vec::new()),
        }
    }

    pub fn health(&self) -> serde_json::Value {
        let storage = match self.store.keys(Segment::Projects) {
            Ok(keys) => json!({ "ok": true, "projects": keys.len() }),
            Err(e) => json!({ "ok": false, "error": e.to_string() }),
        };
        json!({ "storage": storage })
    }
}

/// Make a per-document graph acceptable to the merge: drop dangling edges,
/// every `is_a` edge on a cycle, and the `is_a` side of synonym/`is_a`
/// clashes. Returns whether anything was removed.
pub fn repair_document_graph(g: &mut Ontograph) -> bool {
    let report = check_consistency(g);
    if report.consistent {
        return false;
    }
    let mut drop: BTreeSet<(String, String, icon_core::linganalysis::RelationType)> = BTreeSet::new();
    for f in &report.findings {
        for e in &f.edges {
            let keep_synonym =
                f.kind == FindingKind::SynonymIsaConflict && e.rtype != icon_core::linganalysis::RelationType::IsA;
            if !keep_synonym {
                drop.insert((e.source.clone(), e.target.clone(), e.rtype));
            }
        }
    }
    for k in &drop {
        g.edges.remove(k);
    }
    debug_assert!(check_consistency(g).consistent);
    true
}
