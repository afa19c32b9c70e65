//! JSON-over-HTTP API. Handlers authenticate, then run the synchronous
//! service on the blocking pool.

use std::convert::Infallible;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{FromRequestParts, Path, Query, State};
use axum::http::request::Parts;
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::Stream;
use icon_core::index::QueryMode;
use icon_core::linganalysis::Dictionary;
use icon_core::ontology::Verdict;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::broadcast::error::RecvError;

use crate::auth::Auth;
use crate::error::ServiceError;
use crate::project::Stage;
use crate::service::{IngestRequest, Service, StageParams};
use crate::startup::App;

#[derive(Clone)]
pub struct AppState {
    pub service: Arc<Service>,
    pub auth: Arc<Auth>,
}

impl From<&App> for AppState {
    fn from(app: &App) -> Self {
        AppState {
            service: app.service.clone(),
            auth: app.auth.clone(),
        }
    }
}

pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let mut resp = (status, Json(self.0.to_json())).into_response();
        if status == StatusCode::UNAUTHORIZED {
            resp.headers_mut()
                .insert(header::WWW_AUTHENTICATE, HeaderValue::from_static("Bearer"));
        }
        resp
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// The authenticated user. The token comes from `Authorization: Bearer`, or
/// from `access_token` in the query for clients that cannot set headers
/// (browser event streams).
pub struct Actor(pub String);

impl FromRequestParts<AppState> for Actor {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, Self::Rejection> {
        let from_header = parts
            .headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(str::trim)
            .map(str::to_string);
        let from_query = || {
            parts.uri.query().and_then(|q| {
                q.split('&')
                    .filter_map(|kv| kv.split_once('='))
                    .find(|(k, _)| *k == "access_token")
                    .map(|(_, v)| v.to_string())
            })
        };
        let token = from_header
            .or_else(from_query)
            .ok_or_else(|| ServiceError::AuthFailed("missing bearer token".into()))?;
        Ok(Actor(state.auth.authenticate(&token)?))
    }
}

async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    F: FnOnce() -> Result<T, ServiceError> + Send + 'static,
    T: Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError),
        Err(e) => Err(ApiError(ServiceError::Validation(format!("worker failed: {e}")))),
    }
}

/// Parse a JSON body; an empty body is the type's default.
fn body<T: DeserializeOwned + Default>(bytes: &Bytes) -> ApiResult<T> {
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    required_body(bytes)
}

fn required_body<T: DeserializeOwned>(bytes: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(bytes).map_err(|e| ApiError(ServiceError::Validation(format!("request body: {e}"))))
}

fn etag(digest: &str) -> HeaderValue {
    HeaderValue::from_str(&format!("\"{digest}\"")).expect("hex digest is a valid header value")
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/auth/login", post(login))
        .route("/auth/logout", post(logout))
        .route("/projects", get(list_projects).post(create_project))
        .route("/projects/{id}", get(get_project))
        .route("/projects/{id}/stages/{stage}", post(run_stage))
        .route("/projects/{id}/progress", get(progress))
        .route("/projects/{id}/ontology", get(get_ontology).put(put_ontology))
        .route("/projects/{id}/verify", post(verify))
        .route("/projects/{id}/terms", get(terms))
        .route("/projects/{id}/concepts", get(concepts))
        .route("/projects/{id}/relations", get(relations))
        .route("/projects/{id}/events", get(events))
        .route("/dictionaries", get(dictionaries).post(import_dictionary))
        .route("/documents", get(documents).post(ingest))
        .route("/search", get(search))
        .with_state(state)
}

async fn health(State(s): State<AppState>) -> Json<Value> {
    let service = s.service.clone();
    let storage = tokio::task::spawn_blocking(move || service.health())
        .await
        .unwrap_or_else(|e| json!({ "error": e.to_string() }));
    Json(json!({ "status": "ok", "details": storage }))
}

#[derive(Deserialize)]
struct LoginRequest {
    user: String,
    password: String,
}

async fn login(State(s): State<AppState>, bytes: Bytes) -> ApiResult<impl IntoResponse> {
    let req: LoginRequest = required_body(&bytes)?;
    Ok(Json(s.auth.login(&req.user, &req.password)?))
}

async fn logout(State(s): State<AppState>, headers: HeaderMap, _actor: Actor) -> StatusCode {
    if let Some(token) = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
    {
        s.auth.logout(token.trim());
    }
    StatusCode::NO_CONTENT
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateProject {
    name: String,
    /// An exchange document.
    #[serde(default)]
    initial_ontology: Option<Value>,
}

async fn create_project(State(s): State<AppState>, Actor(actor): Actor, bytes: Bytes) -> ApiResult<Response> {
    let req: CreateProject = required_body(&bytes)?;
    let service = s.service.clone();
    let project = blocking(move || {
        let initial = req.initial_ontology.map(|v| v.to_string());
        service.create_project(&req.name, initial.as_deref(), &actor)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(project)).into_response())
}

async fn list_projects(State(s): State<AppState>, _actor: Actor) -> ApiResult<impl IntoResponse> {
    let service = s.service.clone();
    Ok(Json(blocking(move || service.projects()).await?))
}

async fn get_project(State(s): State<AppState>, _actor: Actor, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let service = s.service.clone();
    Ok(Json(blocking(move || service.project(&id)).await?))
}

async fn run_stage(
    State(s): State<AppState>,
    Actor(actor): Actor,
    Path((id, stage)): Path<(String, String)>,
    bytes: Bytes,
) -> ApiResult<impl IntoResponse> {
    let stage: Stage = stage
        .parse()
        .map_err(|e: String| ApiError(ServiceError::Validation(e)))?;
    let params: StageParams = body(&bytes)?;
    let service = s.service.clone();
    Ok(Json(blocking(move || service.run_stage(&id, stage, &params, &actor)).await?))
}

async fn progress(State(s): State<AppState>, _actor: Actor, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let service = s.service.clone();
    Ok(Json(blocking(move || service.progress(&id)).await?))
}

async fn get_ontology(State(s): State<AppState>, _actor: Actor, Path(id): Path<String>) -> ApiResult<Response> {
    let service = s.service.clone();
    let ontology = blocking(move || service.ontology(&id)).await?;
    Ok((
        [
            (header::CONTENT_TYPE, HeaderValue::from_static("application/json")),
            (header::ETAG, etag(&ontology.digest())),
        ],
        ontology.to_exchange_json(),
    )
        .into_response())
}

async fn put_ontology(
    State(s): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
    headers: HeaderMap,
    bytes: Bytes,
) -> ApiResult<Response> {
    let if_match = headers
        .get(header::IF_MATCH)
        .and_then(|v| v.to_str().ok())
        .map(str::to_string)
        .ok_or_else(|| ServiceError::Validation("If-Match header with the current digest is required".into()))?;
    let text = String::from_utf8(bytes.to_vec())
        .map_err(|_| ServiceError::Validation("request body is not UTF-8".into()))?;
    let service = s.service.clone();
    let digest = blocking(move || service.save_ontology(&id, &text, &if_match, &actor)).await?;
    Ok(([(header::ETAG, etag(&digest))], Json(json!({ "digest": digest }))).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyRequest {
    verdict: Verdict,
    #[serde(default)]
    comment: String,
}

async fn verify(
    State(s): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
    bytes: Bytes,
) -> ApiResult<impl IntoResponse> {
    let req: VerifyRequest = required_body(&bytes)?;
    let service = s.service.clone();
    let (progress, audit) = blocking(move || service.verify(&id, req.verdict, &actor, &req.comment)).await?;
    Ok(Json(json!({ "progress": progress, "audit": audit })))
}

async fn terms(State(s): State<AppState>, _actor: Actor, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let service = s.service.clone();
    Ok(Json(blocking(move || service.terms(&id)).await?))
}

async fn concepts(State(s): State<AppState>, _actor: Actor, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let service = s.service.clone();
    Ok(Json(blocking(move || service.concepts(&id)).await?))
}

async fn relations(State(s): State<AppState>, _actor: Actor, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let service = s.service.clone();
    Ok(Json(blocking(move || service.relations(&id)).await?))
}

/// Server-sent events for one project: a `progress` snapshot, then every
/// event published for the project.
async fn events(
    State(s): State<AppState>,
    _actor: Actor,
    Path(id): Path<String>,
) -> ApiResult<Sse<impl Stream<Item = Result<Event, Infallible>>>> {
    // subscribe before the snapshot so nothing falls in between
    let rx = s.service.events().subscribe();
    let service = s.service.clone();
    let pid = id.clone();
    let snapshot = blocking(move || service.progress(&pid)).await?;
    let first = Event::default()
        .event("progress")
        .json_data(&snapshot)
        .expect("progress serializes");

    let live = futures::stream::unfold((rx, id), |(mut rx, id)| async move {
        loop {
            match rx.recv().await {
                Ok(ev) if ev.project_id == id => {
                    let event = Event::default()
                        .id(ev.seq.to_string())
                        .event(ev.event.clone())
                        .json_data(&ev)
                        .expect("event serializes");
                    return Some((Ok(event), (rx, id)));
                }
                Ok(_) => {}
                Err(RecvError::Lagged(n)) => {
                    let event = Event::default().event("lagged").data(n.to_string());
                    return Some((Ok(event), (rx, id)));
                }
                Err(RecvError::Closed) => return None,
            }
        }
    });
    let stream = futures::StreamExt::chain(futures::stream::once(async { Ok(first) }), live);
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}

async fn dictionaries(State(s): State<AppState>, _actor: Actor) -> ApiResult<impl IntoResponse> {
    let service = s.service.clone();
    Ok(Json(blocking(move || service.dictionary_summaries()).await?))
}

async fn import_dictionary(State(s): State<AppState>, _actor: Actor, bytes: Bytes) -> ApiResult<Response> {
    let text = String::from_utf8(bytes.to_vec())
        .map_err(|_| ServiceError::Validation("request body is not UTF-8".into()))?;
    let dict = Dictionary::from_json(&text).map_err(ServiceError::from)?;
    let service = s.service.clone();
    let summary = json!({ "id": dict.id, "entries": dict.entries.len() });
    blocking(move || service.put_dictionary(&dict)).await?;
    Ok((StatusCode::CREATED, Json(summary)).into_response())
}

async fn documents(State(s): State<AppState>, _actor: Actor) -> ApiResult<impl IntoResponse> {
    let service = s.service.clone();
    Ok(Json(blocking(move || service.documents()).await?))
}

async fn ingest(State(s): State<AppState>, _actor: Actor, bytes: Bytes) -> ApiResult<Response> {
    let req: IngestRequest = required_body(&bytes)?;
    let service = s.service.clone();
    let docs = blocking(move || service.ingest(&req)).await?;
    Ok((StatusCode::CREATED, Json(docs)).into_response())
}

#[derive(Deserialize, Serialize)]
struct SearchParams {
    corpus: String,
    q: String,
    #[serde(default)]
    mode: Option<String>,
}

async fn search(
    State(s): State<AppState>,
    _actor: Actor,
    params: Result<Query<SearchParams>, axum::extract::rejection::QueryRejection>,
) -> ApiResult<impl IntoResponse> {
    let Query(p) = params.map_err(|e| ServiceError::Validation(e.body_text()))?;
    let mode: QueryMode = p
        .mode
        .as_deref()
        .unwrap_or("any")
        .parse()
        .map_err(ServiceError::Validation)?;
    let service = s.service.clone();
    Ok(Json(blocking(move || service.search(&p.corpus, &p.q, mode)).await?))
}
