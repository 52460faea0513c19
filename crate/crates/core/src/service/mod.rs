//! HTTP API. Mutations need `Authorization: Bearer <api token>`; reads are
//! open. Single records are returned as one structured-encoding line, lists
//! as one record per line.

mod harvest;

use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::engine::{Edit, MaintainerAssertion};
use crate::error::RegistryError;
use crate::kos::Format;
use crate::model::{AgentId, AgentKind, ConceptDraft, Contact, StatusTerm, Uri, UriStrategy};
use crate::notify::{Answer, Channel, Granularity, Scope};
use crate::registry::{ImportRequest, Registry, Resolution, Since, UpdateOutcome, UpdateRequest};
use crate::wire;

pub use harvest::harvest;

pub const VERSION_HEADER: &str = "x-scheme-version";
pub const LOSS_HEADER: &str = "x-loss-count";
const JSON: &str = "application/json";
const JSON_LINES: &str = "application/x-ndjson";

#[derive(Clone)]
pub struct AppState {
    pub registry: Arc<Registry>,
    pub client: reqwest::Client,
}

impl AppState {
    pub fn new(registry: Arc<Registry>) -> Self {
        AppState { registry, client: reqwest::Client::new() }
    }
}

pub struct ApiError(RegistryError);

impl From<RegistryError> for ApiError {
    fn from(e: RegistryError) -> Self {
        ApiError(e)
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    rules: Vec<String>,
}

pub fn status_for(e: &RegistryError) -> StatusCode {
    use RegistryError::*;
    match e {
        Unauthorized => StatusCode::UNAUTHORIZED,
        NotOwner | NotMaintainer(_) => StatusCode::FORBIDDEN,
        UnknownScheme(_) | UnknownConcept(_) | UnknownAgent(_) | UnknownToken => StatusCode::NOT_FOUND,
        VersionConflict { .. } | TokenTaken(_) | DuplicateUri(_) | Deprecated(_) | AlreadyDeprecated(_)
        | DeprecatedIsTerminal(_) | Locked => StatusCode::CONFLICT,
        TokenUsed | TokenExpired => StatusCode::GONE,
        ValidationFailed(_) => StatusCode::UNPROCESSABLE_ENTITY,
        PeerUnreachable(_) | ProtocolError(_) => StatusCode::BAD_GATEWAY,
        Io(_) | CorruptRecord { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::BAD_REQUEST,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = status_for(&self.0);
        let body = ErrorBody { error: self.0.code(), message: self.0.to_string(), rules: self.0.rule_ids() };
        (status, [(header::CONTENT_TYPE, JSON)], wire::to_line(&body) + "\n").into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

fn one<T: Serialize>(value: &T) -> Response {
    ([(header::CONTENT_TYPE, JSON)], wire::to_line(value) + "\n").into_response()
}

fn lines<T: Serialize>(values: &[T]) -> Response {
    ([(header::CONTENT_TYPE, JSON_LINES)], wire::to_lines(values)).into_response()
}

fn bad(msg: impl Into<String>) -> ApiError {
    ApiError(RegistryError::InvalidInput(msg.into()))
}

/// Runs a blocking registry call off the async workers.
async fn blocking<T: Send + 'static>(
    st: &AppState,
    f: impl FnOnce(&Registry) -> Result<T, RegistryError> + Send + 'static,
) -> Result<T, ApiError> {
    let reg = st.registry.clone();
    tokio::task::spawn_blocking(move || f(&reg))
        .await
        .map_err(|e| ApiError(RegistryError::InvalidInput(format!("worker failed: {e}"))))?
        .map_err(ApiError)
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers.get(header::AUTHORIZATION)?.to_str().ok()?.strip_prefix("Bearer ")
}

fn caller(st: &AppState, headers: &HeaderMap) -> Result<AgentId, ApiError> {
    let token = bearer(headers).ok_or(ApiError(RegistryError::Unauthorized))?;
    Ok(st.registry.authenticate(token.trim())?)
}

/// `since` is either a version number or an RFC 3339 timestamp.
pub fn parse_since(raw: &str) -> Result<Since, RegistryError> {
    if let Ok(v) = raw.parse::<u64>() {
        return Ok(Since::Version(v));
    }
    DateTime::parse_from_rfc3339(raw)
        .map(|t| Since::Time(t.with_timezone(&Utc)))
        .map_err(|_| RegistryError::InvalidInput(format!("`since` must be a version or an RFC 3339 timestamp, got `{raw}`")))
}

fn resolve_concept(reg: &Registry, token: &str, id: &str) -> Result<Uri, RegistryError> {
    Ok(reg.get_concept(token, id)?.uri)
}

pub fn router(st: AppState) -> Router {
    Router::new()
        .route("/schemes", get(list_schemes).post(create_scheme))
        .route("/schemes/{token}", get(get_scheme))
        .route("/schemes/{token}/changes", get(changes))
        .route("/schemes/{token}/history", get(history))
        .route("/schemes/{token}/feed.atom", get(scheme_feed))
        .route("/schemes/{token}/concepts", post(add_concept))
        .route("/schemes/{token}/concepts/{id}", get(get_concept).post(update_concept))
        .route("/schemes/{token}/concepts/{id}/preview", post(preview))
        .route("/schemes/{token}/concepts/{id}/split", post(split))
        .route("/schemes/{token}/concepts/{id}/status", post(set_status))
        .route("/schemes/{token}/concepts/{id}/deprecate", post(deprecate))
        .route("/schemes/{token}/merge", post(merge))
        .route("/schemes/{token}/maintainers", post(add_maintainer))
        .route("/agents", post(register_agent))
        .route("/subscriptions", post(subscribe))
        .route("/subscriptions/{id}/feed.atom", get(subscription_feed))
        .route("/usages", post(register_usage))
        .route("/notifications", get(notifications))
        .route("/tickets", get(tickets))
        .route("/confirm/{token}", get(confirm))
        .route("/ingest", post(ingest))
        .route("/harvest", post(harvest_peer))
        .with_state(st)
}

/// Serves until the process receives Ctrl-C.
pub async fn serve(registry: Arc<Registry>, bind: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    tracing::info!(addr = %listener.local_addr()?, "serving");
    axum::serve(listener, router(AppState::new(registry)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

// ----- reads -----

#[derive(Deserialize)]
struct ListQuery {
    q: Option<String>,
}

async fn list_schemes(State(st): State<AppState>, Query(q): Query<ListQuery>) -> ApiResult {
    let out = blocking(&st, move |r| r.list_schemes(q.q.as_deref())).await?;
    Ok(lines(&out))
}

#[derive(Deserialize)]
struct SnapshotQuery {
    version: Option<String>,
    format: Option<String>,
}

async fn get_scheme(State(st): State<AppState>, Path(token): Path<String>, Query(q): Query<SnapshotQuery>) -> ApiResult {
    let format: Format = q.format.as_deref().unwrap_or("triples").parse()?;
    let version = match q.version.as_deref() {
        None => None,
        Some(v) => Some(v.parse::<u64>().map_err(|_| ApiError(RegistryError::UnknownVersion(0)))?),
    };
    let (body, losses, v) = blocking(&st, move |r| r.export(&token, version, format)).await?;
    let mut resp = body.into_response();
    let h = resp.headers_mut();
    h.insert(header::CONTENT_TYPE, HeaderValue::from_static(format.content_type()));
    h.insert(VERSION_HEADER, HeaderValue::from(v));
    h.insert(LOSS_HEADER, HeaderValue::from(losses.len()));
    Ok(resp)
}

#[derive(Deserialize)]
struct SinceQuery {
    since: Option<String>,
}

async fn changes(State(st): State<AppState>, Path(token): Path<String>, Query(q): Query<SinceQuery>) -> ApiResult {
    let since = parse_since(q.since.as_deref().unwrap_or("0"))?;
    let events = blocking(&st, move |r| r.changes_since(&token, since)).await?;
    Ok(lines(&events))
}

#[derive(Deserialize)]
struct HistoryQuery {
    uri: Option<String>,
}

async fn history(State(st): State<AppState>, Path(token): Path<String>, Query(q): Query<HistoryQuery>) -> ApiResult {
    let uri = q.uri.as_deref().map(Uri::parse).transpose()?;
    let events = blocking(&st, move |r| r.history(&token, uri.as_ref())).await?;
    Ok(lines(&events))
}

async fn scheme_feed(State(st): State<AppState>, Path(token): Path<String>, Query(q): Query<SinceQuery>) -> ApiResult {
    let since = q.since.as_deref().map(parse_since).transpose()?;
    let xml = blocking(&st, move |r| r.render_feed(&Scope::Scheme(token), since)).await?;
    Ok(([(header::CONTENT_TYPE, "application/atom+xml")], xml).into_response())
}

async fn subscription_feed(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let xml = blocking(&st, move |r| r.subscription_feed(&id)).await?;
    Ok(([(header::CONTENT_TYPE, "application/atom+xml")], xml).into_response())
}

async fn get_concept(State(st): State<AppState>, Path((token, id)): Path<(String, String)>) -> ApiResult {
    let c = blocking(&st, move |r| r.get_concept(&token, &id)).await?;
    Ok(one(&c))
}

async fn notifications(State(st): State<AppState>, headers: HeaderMap) -> ApiResult {
    let me = caller(&st, &headers)?;
    Ok(lines(&st.registry.notifications(&me)))
}

async fn tickets(State(st): State<AppState>, headers: HeaderMap) -> ApiResult {
    let me = caller(&st, &headers)?;
    Ok(lines(&st.registry.pending_tickets(&me)))
}

// ----- mutations -----

#[derive(Deserialize)]
struct CreateSchemeBody {
    token: String,
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    description: Option<String>,
    #[serde(default)]
    strategy: Option<UriStrategy>,
    /// With a payload the scheme is imported from it.
    #[serde(default)]
    format: Option<String>,
    #[serde(default)]
    payload: Option<String>,
}

async fn create_scheme(State(st): State<AppState>, headers: HeaderMap, Json(b): Json<CreateSchemeBody>) -> ApiResult {
    let me = caller(&st, &headers)?;
    let meta = blocking(&st, move |r| match b.payload {
        Some(payload) => {
            let req = ImportRequest {
                token: b.token,
                owner: me,
                format: b.format.as_deref().unwrap_or("triples").parse()?,
                title: b.title,
                description: b.description,
                strategy: b.strategy,
            };
            r.import(&req, payload.as_bytes())
        }
        None => r.create_scheme(
            &me,
            &b.token,
            b.title.as_deref().unwrap_or_default(),
            b.description.as_deref().unwrap_or_default(),
            b.strategy.unwrap_or_else(|| UriStrategy::registry_assigned(None)),
        ),
    })
    .await?;
    Ok((StatusCode::CREATED, one(&meta)).into_response())
}

#[derive(Deserialize)]
struct AddConceptBody {
    #[serde(flatten)]
    draft: ConceptDraft,
    #[serde(default)]
    expected_version: Option<u64>,
}

#[derive(Serialize)]
struct Created<T> {
    version: u64,
    #[serde(flatten)]
    value: T,
}

async fn add_concept(State(st): State<AppState>, Path(token): Path<String>, headers: HeaderMap, Json(b): Json<AddConceptBody>) -> ApiResult {
    let me = caller(&st, &headers)?;
    let (c, version) = blocking(&st, move |r| r.add_concept(&token, &b.draft, &me, b.expected_version)).await?;
    Ok((StatusCode::CREATED, one(&Created { version, value: c })).into_response())
}

async fn update_concept(
    State(st): State<AppState>,
    Path((token, id)): Path<(String, String)>,
    headers: HeaderMap,
    Json(b): Json<UpdateRequest>,
) -> ApiResult {
    let me = caller(&st, &headers)?;
    let out = blocking(&st, move |r| {
        let uri = resolve_concept(r, &token, &id)?;
        r.update_concept(&token, &uri, &b, &me)
    })
    .await?;
    let status = match out {
        UpdateOutcome::PendingConfirmation { .. } => StatusCode::ACCEPTED,
        _ => StatusCode::OK,
    };
    Ok((status, one(&out)).into_response())
}

#[derive(Deserialize)]
struct PreviewBody {
    edits: Vec<Edit>,
    #[serde(default)]
    assertion: Option<MaintainerAssertion>,
}

async fn preview(State(st): State<AppState>, Path((token, id)): Path<(String, String)>, headers: HeaderMap, Json(b): Json<PreviewBody>) -> ApiResult {
    caller(&st, &headers)?;
    let p = blocking(&st, move |r| {
        let uri = resolve_concept(r, &token, &id)?;
        r.preview(&token, &uri, &b.edits, b.assertion)
    })
    .await?;
    Ok(one(&p))
}

#[derive(Deserialize)]
struct SplitBody {
    drafts: Vec<ConceptDraft>,
    #[serde(default)]
    expected_version: Option<u64>,
}

#[derive(Serialize)]
struct SuccessionOut {
    version: u64,
    uris: Vec<Uri>,
}

async fn split(State(st): State<AppState>, Path((token, id)): Path<(String, String)>, headers: HeaderMap, Json(b): Json<SplitBody>) -> ApiResult {
    let me = caller(&st, &headers)?;
    let (uris, version) = blocking(&st, move |r| {
        let uri = resolve_concept(r, &token, &id)?;
        r.split_concept(&token, &uri, &b.drafts, &me, b.expected_version)
    })
    .await?;
    Ok(one(&SuccessionOut { version, uris }))
}

#[derive(Deserialize)]
struct MergeBody {
    sources: Vec<String>,
    draft: ConceptDraft,
    #[serde(default)]
    expected_version: Option<u64>,
}

async fn merge(State(st): State<AppState>, Path(token): Path<String>, headers: HeaderMap, Json(b): Json<MergeBody>) -> ApiResult {
    let me = caller(&st, &headers)?;
    let (uri, version) = blocking(&st, move |r| {
        let sources = b.sources.iter().map(|s| resolve_concept(r, &token, s)).collect::<Result<Vec<_>, _>>()?;
        r.merge_concepts(&token, &sources, &b.draft, &me, b.expected_version)
    })
    .await?;
    Ok(one(&SuccessionOut { version, uris: vec![uri] }))
}

#[derive(Deserialize)]
struct StatusBody {
    status: StatusTerm,
}

#[derive(Serialize)]
struct VersionOut {
    version: u64,
}

async fn set_status(State(st): State<AppState>, Path((token, id)): Path<(String, String)>, headers: HeaderMap, Json(b): Json<StatusBody>) -> ApiResult {
    let me = caller(&st, &headers)?;
    let version = blocking(&st, move |r| {
        let uri = resolve_concept(r, &token, &id)?;
        r.set_status(&token, &uri, b.status, &me)
    })
    .await?;
    Ok(one(&VersionOut { version }))
}

async fn deprecate(State(st): State<AppState>, Path((token, id)): Path<(String, String)>, headers: HeaderMap) -> ApiResult {
    let me = caller(&st, &headers)?;
    let version = blocking(&st, move |r| {
        let uri = resolve_concept(r, &token, &id)?;
        r.deprecate_concept(&token, &uri, &me)
    })
    .await?;
    Ok(one(&VersionOut { version }))
}

#[derive(Deserialize)]
struct MaintainerBody {
    agent: AgentId,
}

async fn add_maintainer(State(st): State<AppState>, Path(token): Path<String>, headers: HeaderMap, Json(b): Json<MaintainerBody>) -> ApiResult {
    let me = caller(&st, &headers)?;
    let meta = blocking(&st, move |r| r.designate_maintainer(&token, &b.agent, &me)).await?;
    Ok(one(&meta))
}

#[derive(Deserialize)]
struct AgentBody {
    name: String,
    kind: AgentKind,
    contacts: Vec<Contact>,
}

#[derive(Serialize)]
struct AgentOut {
    id: AgentId,
    api_token: String,
}

async fn register_agent(State(st): State<AppState>, Json(b): Json<AgentBody>) -> ApiResult {
    let (agent, api_token) = blocking(&st, move |r| r.register_agent(&b.name, b.kind, b.contacts)).await?;
    Ok((StatusCode::CREATED, one(&AgentOut { id: agent.id, api_token })).into_response())
}

#[derive(Deserialize)]
struct SubscribeBody {
    /// `all` or a scheme token / copy id.
    scope: String,
    channel: Channel,
    #[serde(default = "every_commit")]
    granularity: Granularity,
}

fn every_commit() -> Granularity {
    Granularity::EveryCommit
}

async fn subscribe(State(st): State<AppState>, headers: HeaderMap, Json(b): Json<SubscribeBody>) -> ApiResult {
    let me = caller(&st, &headers)?;
    let scope = if b.scope == "all" { Scope::All } else { Scope::Scheme(b.scope) };
    let s = blocking(&st, move |r| r.subscribe(&me, scope, b.channel, b.granularity)).await?;
    Ok(one(&s))
}

#[derive(Deserialize)]
struct UsageBody {
    scheme: String,
}

async fn register_usage(State(st): State<AppState>, headers: HeaderMap, Json(b): Json<UsageBody>) -> ApiResult {
    let me = caller(&st, &headers)?;
    let u = blocking(&st, move |r| r.register_usage(&me, &b.scheme)).await?;
    Ok(one(&u))
}

#[derive(Deserialize)]
struct ConfirmQuery {
    answer: Option<String>,
}

async fn confirm(State(st): State<AppState>, Path(token): Path<String>, Query(q): Query<ConfirmQuery>) -> ApiResult {
    let answer = match q.answer.as_deref() {
        Some("yes") => Answer::Yes,
        Some("no") => Answer::No,
        _ => return Err(bad("answer must be yes or no")),
    };
    let res = blocking(&st, move |r| r.resolve_confirmation(&token, answer)).await?;
    let text = match res {
        Resolution::Discarded { version } => format!("change discarded, scheme at version {version}\n"),
        Resolution::Applied { outcome } => match outcome {
            UpdateOutcome::Updated { version, .. } | UpdateOutcome::SuccessorMinted { version, .. } => {
                format!("change applied, scheme at version {version}\n")
            }
            UpdateOutcome::PendingConfirmation { ticket, .. } => format!("change needs a further answer: ticket {ticket}\n"),
        },
    };
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], text).into_response())
}

#[derive(Deserialize)]
struct IngestBody {
    source: String,
    #[serde(default)]
    scheme_uri: Option<Uri>,
    payload: String,
}

async fn ingest(State(st): State<AppState>, headers: HeaderMap, Json(b): Json<IngestBody>) -> ApiResult {
    caller(&st, &headers)?;
    let out = blocking(&st, move |r| r.ingest_snapshot(&b.source, b.scheme_uri.as_ref(), b.payload.as_bytes())).await?;
    Ok(one(&out))
}

#[derive(Deserialize)]
struct HarvestBody {
    peer: String,
}

async fn harvest_peer(State(st): State<AppState>, headers: HeaderMap, Json(b): Json<HarvestBody>) -> ApiResult {
    caller(&st, &headers)?;
    let report = harvest(&st.registry, &st.client, &b.peer).await?;
    Ok(one(&report))
}
