use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use fsmkit::{load_document, parse_fsm_source, Word};
use parking_lot::{Mutex, RwLock};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::session::{file_stem_ok, Edit, Generated, Session, SessionError, SessionView};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Directory for documents and generated source files.
    pub root: PathBuf,
    /// Built web assets to serve at `/`, if any.
    pub assets: Option<PathBuf>,
}

type SessionRef = Arc<Mutex<Session>>;

#[derive(Clone)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<String, SessionRef>>>,
    root: Arc<PathBuf>,
}

impl AppState {
    pub fn new(root: PathBuf) -> Self {
        AppState {
            sessions: Arc::default(),
            root: Arc::new(root),
        }
    }

    fn session(&self, id: &str) -> Result<SessionRef, ApiError> {
        self.sessions
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no session {id}")))
    }
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: &'static str,
    message: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, message)
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match &e {
            SessionError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            SessionError::Conflict(_) => StatusCode::CONFLICT,
            SessionError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let error = match self.status {
            StatusCode::NOT_FOUND => "not_found",
            StatusCode::CONFLICT => "conflict",
            StatusCode::UNPROCESSABLE_ENTITY => "invalid",
            StatusCode::BAD_REQUEST => "malformed",
            _ => "internal",
        };
        let body = ErrorBody {
            error,
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_body<T: DeserializeOwned>(bytes: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(bytes)
        .map_err(|e| ApiError::bad_request(format!("malformed payload: {e}")))
}

/// Like `parse_body`, but an empty body means the defaults.
fn parse_optional<T: DeserializeOwned + Default>(bytes: &Bytes) -> ApiResult<T> {
    if bytes.iter().all(u8::is_ascii_whitespace) {
        Ok(T::default())
    } else {
        parse_body(bytes)
    }
}

/// Tape contents as either a token array or one whitespace-separated string.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum TapeInput {
    Text(String),
    Symbols(Word),
}

impl TapeInput {
    fn into_word(self) -> ApiResult<Word> {
        match self {
            TapeInput::Symbols(w) => Ok(w),
            TapeInput::Text(t) => Word::parse(&t).map_err(|e| ApiError::bad_request(e.to_string())),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateBody {
    /// `.fsmx` document text.
    document: Option<String>,
    /// FSM source containing a `define` form.
    source: Option<String>,
    /// Name of a `.fsmx` file in the document directory.
    file: Option<String>,
}

#[derive(Debug, Deserialize)]
struct TapeBody {
    tape: TapeInput,
}

#[derive(Debug, Deserialize)]
struct AppendBody {
    symbols: TapeInput,
}

#[derive(Debug, Default, Deserialize)]
struct TestBody {
    n: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
struct SweepBody {
    random: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
struct DocumentBody {
    document: String,
}

#[derive(Debug, Default, Deserialize)]
struct SaveBody {
    file: Option<String>,
}

#[derive(Debug, Serialize)]
struct DocumentResponse {
    name: String,
    document: String,
}

#[derive(Debug, Serialize)]
struct SavedResponse {
    file: PathBuf,
}

#[derive(Debug, Serialize)]
struct GencodeResponse {
    generated: Generated,
    session: SessionView,
}

fn invalid(message: impl Into<String>) -> ApiError {
    ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, message)
}

async fn create_session(
    State(app): State<AppState>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<SessionView>)> {
    let body: CreateBody = parse_optional(&body)?;
    let id = uuid::Uuid::new_v4().to_string();
    let session = match (body.document, body.source, body.file) {
        (None, None, None) => Session::new(id.clone()),
        (Some(text), None, None) => Session::from_document(
            id.clone(),
            load_document(&text).map_err(|e| invalid(e.to_string()))?,
        ),
        (None, Some(text), None) => Session::from_document(
            id.clone(),
            parse_fsm_source(&text).map_err(|e| invalid(e.to_string()))?,
        ),
        (None, None, Some(file)) => {
            if !file_stem_ok(&file) {
                return Err(ApiError::bad_request(format!(
                    "{file} is not a plain file name"
                )));
            }
            let path = app.root.join(&file);
            let text = std::fs::read_to_string(&path).map_err(|e| {
                ApiError::new(StatusCode::NOT_FOUND, format!("{}: {e}", path.display()))
            })?;
            Session::from_document(
                id.clone(),
                load_document(&text).map_err(|e| invalid(e.to_string()))?,
            )
        }
        _ => {
            return Err(ApiError::bad_request(
                "give at most one of document, source, file",
            ))
        }
    };
    let view = session.view();
    app.sessions
        .write()
        .insert(id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<SessionView>> {
    Ok(Json(app.session(&id)?.lock().view()))
}

async fn delete_session(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<StatusCode> {
    match app.sessions.write().remove(&id) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::new(
            StatusCode::NOT_FOUND,
            format!("no session {id}"),
        )),
    }
}

/// Runs `f` on the locked session and answers with the updated view.
fn mutate(
    app: &AppState,
    id: &str,
    f: impl FnOnce(&mut Session) -> Result<(), ApiError>,
) -> ApiResult<Json<SessionView>> {
    let session = app.session(id)?;
    let mut s = session.lock();
    f(&mut s)?;
    Ok(Json(s.view()))
}

async fn edit(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<SessionView>> {
    let session = app.session(&id)?;
    let edit: Edit = parse_body(&body)?;
    let mut s = session.lock();
    s.apply_edit(edit)?;
    Ok(Json(s.view()))
}

async fn set_tape(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<SessionView>> {
    app.session(&id)?;
    let tape = parse_body::<TapeBody>(&body)?.tape.into_word()?;
    mutate(&app, &id, |s| Ok(s.set_tape(tape)?))
}

async fn append_tape(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<SessionView>> {
    app.session(&id)?;
    let symbols = parse_body::<AppendBody>(&body)?.symbols.into_word()?;
    mutate(&app, &id, |s| Ok(s.append_tape(symbols)?))
}

async fn clear_tape(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<SessionView>> {
    mutate(&app, &id, |s| {
        s.clear_tape();
        Ok(())
    })
}

async fn run(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    mutate(&app, &id, |s| Ok(s.run()?))
}

async fn step_forward(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<SessionView>> {
    mutate(&app, &id, |s| Ok(s.step_forward()?))
}

async fn step_back(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<SessionView>> {
    mutate(&app, &id, |s| Ok(s.step_back()?))
}

async fn gencode(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<GencodeResponse>> {
    let session = app.session(&id)?;
    let s = session.lock();
    let generated = s.gencode(&app.root)?;
    Ok(Json(GencodeResponse {
        generated,
        session: s.view(),
    }))
}

async fn test(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let session = app.session(&id)?;
    let body: TestBody = parse_optional(&body)?;
    let report = session.lock().test(
        body.n.unwrap_or(fsmkit::testing::DEFAULT_TESTS),
        body.seed.unwrap_or(0),
    )?;
    Ok(Json(report).into_response())
}

async fn sweep(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let session = app.session(&id)?;
    let body: SweepBody = parse_optional(&body)?;
    let report = session
        .lock()
        .sweep(body.random.unwrap_or(0), body.seed.unwrap_or(0))?;
    Ok(Json(report).into_response())
}

async fn get_document(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<DocumentResponse>> {
    let session = app.session(&id)?;
    let s = session.lock();
    Ok(Json(DocumentResponse {
        name: s.name().to_string(),
        document: s.save()?,
    }))
}

async fn load(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<SessionView>> {
    app.session(&id)?;
    let text = parse_body::<DocumentBody>(&body)?.document;
    mutate(&app, &id, |s| Ok(s.load(&text)?))
}

async fn save(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<SavedResponse>> {
    let session = app.session(&id)?;
    let body: SaveBody = parse_optional(&body)?;
    let s = session.lock();
    let file = body.file.unwrap_or_else(|| format!("{}.fsmx", s.name()));
    if !file_stem_ok(&file) {
        return Err(ApiError::bad_request(format!(
            "{file} is not a plain file name"
        )));
    }
    let text = s.save()?;
    let path = app.root.join(file);
    std::fs::write(&path, text).map_err(SessionError::from)?;
    Ok(Json(SavedResponse { file: path }))
}

/// The annotated trace in the same JSON the command line prints.
async fn trace(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let payload = app.session(&id)?.lock().trace_payload()?;
    Ok((
        [(header::CONTENT_TYPE, "application/json")],
        payload.to_json(),
    )
        .into_response())
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/sessions", post(create_session))
        .route(
            "/api/sessions/{id}",
            get(get_session).delete(delete_session),
        )
        .route("/api/sessions/{id}/edit", post(edit))
        .route(
            "/api/sessions/{id}/tape",
            axum::routing::put(set_tape).delete(clear_tape),
        )
        .route("/api/sessions/{id}/tape/append", post(append_tape))
        .route("/api/sessions/{id}/run", post(run))
        .route("/api/sessions/{id}/step/forward", post(step_forward))
        .route("/api/sessions/{id}/step/back", post(step_back))
        .route("/api/sessions/{id}/gencode", post(gencode))
        .route("/api/sessions/{id}/test", post(test))
        .route("/api/sessions/{id}/sweep", post(sweep))
        .route("/api/sessions/{id}/document", get(get_document).put(load))
        .route("/api/sessions/{id}/document/save", post(save))
        .route("/api/sessions/{id}/trace", get(trace))
        .with_state(state)
}

pub fn app(config: &ServiceConfig) -> Router {
    let router = router(AppState::new(config.root.clone()));
    match &config.assets {
        Some(dir) => router.fallback_service(ServeDir::new(dir)),
        None => router,
    }
}
