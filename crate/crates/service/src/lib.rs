//! HTTP/JSON host for the resilience engine.
//!
//! A single actor task owns the [`Engine`]; handlers send it commands over a
//! channel and read published snapshots through a watch channel, so readers
//! never observe a half-applied command.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::NaiveDate;
use rmt_core::engine::{
    Command, Engine, EngineError, ErrorClass, Outcome, RouteRequest, ScenarioFile, StateView,
};
use rmt_core::grid::SwitchState;
use rmt_core::hotspot::RiskField;
use rmt_core::metrics::{AhpConfig, ScoreRecord};
use rmt_core::routing::CrewRoute;
use rmt_core::telemetry::{to_ndjson, Event, ScenarioScript, SimOptions};
use rmt_core::{EdgeId, RouteId};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::{mpsc, oneshot, watch};
use tower_http::services::ServeDir;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("configuration error: {0}")]
    Config(#[source] EngineError),
    #[error("cannot bind {addr}: {message}")]
    Bind { addr: String, message: String },
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> ServiceError {
    ServiceError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Where the engine comes from and where it persists to.
#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub scenario: ScenarioFile,
    /// Scenario file rewritten on shutdown; resumed from when it exists.
    pub state_path: Option<PathBuf>,
    /// NDJSON event log, appended after every command.
    pub log_path: Option<PathBuf>,
    pub console_dir: Option<PathBuf>,
    /// Wall-clock pacing of the tick loop; `None` ticks only on request.
    pub tick_interval: Option<Duration>,
}

impl ServiceConfig {
    pub fn new(scenario: ScenarioFile) -> Self {
        Self {
            scenario,
            state_path: None,
            log_path: None,
            console_dir: None,
            tick_interval: None,
        }
    }
}

/// Reads a scenario file, or a scenario script combined with `options` and
/// `ahp`.
pub fn load_scenario(path: &Path, options: SimOptions, ahp: AhpConfig) -> Result<ScenarioFile, ServiceError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let raw: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| ServiceError::Config(EngineError::Parse(format!("{}: {e}", path.display()))))?;
    if raw.get("schema_version").is_some() {
        return ScenarioFile::parse(&text).map_err(ServiceError::Config);
    }
    let script = ScenarioScript::load(path).map_err(|e| ServiceError::Config(e.into()))?;
    ScenarioFile::from_script(&script, options, ahp).map_err(ServiceError::Config)
}

/// Read-only view published after every command.
#[derive(Debug, Clone, Serialize)]
pub struct Published {
    pub state: StateView,
    pub score: ScoreRecord,
    pub history: Vec<ScoreRecord>,
    pub routes: Vec<CrewRoute>,
}

impl Published {
    fn of(engine: &Engine) -> Self {
        Self {
            state: engine.state_view(),
            score: engine.current_score(),
            history: engine.history().to_vec(),
            routes: engine.routes().cloned().collect(),
        }
    }
}

type Reply<T> = oneshot::Sender<Result<T, EngineError>>;

enum Msg {
    Exec(Command, Reply<Outcome>),
    Ask(String, Reply<rmt_core::assistant::Answer>),
    Hotspots(Option<NaiveDate>, Reply<RiskField>),
    Shutdown(String, oneshot::Sender<()>),
}

struct Actor {
    engine: Engine,
    flushed: usize,
    log_path: Option<PathBuf>,
    state_path: Option<PathBuf>,
    publish: watch::Sender<Arc<Published>>,
}

impl Actor {
    fn flush(&mut self) {
        let Some(path) = &self.log_path else { return };
        let fresh = &self.engine.log()[self.flushed..];
        if fresh.is_empty() {
            return;
        }
        let result = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .and_then(|mut f| std::io::Write::write_all(&mut f, to_ndjson(fresh).as_bytes()));
        match result {
            Ok(()) => self.flushed = self.engine.log().len(),
            Err(e) => tracing::error!("appending to {}: {e}", path.display()),
        }
    }

    fn exec(&mut self, cmd: Command) -> Result<Outcome, EngineError> {
        let out = self.engine.execute(cmd);
        if out.is_ok() {
            self.flush();
            self.publish.send_replace(Arc::new(Published::of(&self.engine)));
        }
        out
    }

    fn shutdown(&mut self, reason: &str) {
        self.engine.shutdown(reason);
        self.flush();
        if let Some(path) = &self.state_path {
            if let Err(e) = self.engine.persist(path) {
                tracing::error!("persisting state: {e}");
            }
        }
    }

    async fn run(mut self, mut rx: mpsc::Receiver<Msg>, tick_interval: Option<Duration>) {
        let mut ticker = tick_interval.map(|d| {
            let mut t = tokio::time::interval(d);
            t.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
            t
        });
        loop {
            let msg = match ticker.as_mut() {
                Some(t) => tokio::select! {
                    m = rx.recv() => m,
                    _ = t.tick() => {
                        if !self.engine.is_finished() {
                            if let Err(e) = self.exec(Command::Tick) {
                                tracing::warn!("tick failed: {e}");
                            }
                        }
                        continue;
                    }
                },
                None => rx.recv().await,
            };
            match msg {
                Some(Msg::Exec(cmd, reply)) => {
                    let _ = reply.send(self.exec(cmd));
                }
                Some(Msg::Ask(text, reply)) => {
                    let _ = reply.send(self.engine.ask(&text));
                }
                Some(Msg::Hotspots(date, reply)) => {
                    let field = match date {
                        Some(d) => self.engine.field_on(d),
                        None => Ok(self.engine.field().clone()),
                    };
                    let _ = reply.send(field);
                }
                Some(Msg::Shutdown(reason, done)) => {
                    self.shutdown(&reason);
                    let _ = done.send(());
                    return;
                }
                None => {
                    self.shutdown("channel closed");
                    return;
                }
            }
        }
    }
}

/// Handle shared by request handlers.
#[derive(Clone)]
pub struct AppState {
    tx: mpsc::Sender<Msg>,
    view: watch::Receiver<Arc<Published>>,
}

impl AppState {
    /// Builds the engine and spawns its actor on the current runtime.
    pub fn start(config: ServiceConfig) -> Result<Self, ServiceError> {
        let engine = match &config.state_path {
            Some(p) if p.exists() => Engine::load(p),
            _ => Engine::new(config.scenario.clone()),
        }
        .map_err(|e| match e.class() {
            ErrorClass::Io => ServiceError::Io {
                path: config.state_path.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
                message: e.to_string(),
            },
            _ => ServiceError::Config(e),
        })?;
        let (publish, view) = watch::channel(Arc::new(Published::of(&engine)));
        let (tx, rx) = mpsc::channel(64);
        let mut actor = Actor {
            flushed: 0,
            engine,
            log_path: config.log_path.clone(),
            state_path: config.state_path.clone(),
            publish,
        };
        if let Some(p) = &actor.log_path {
            std::fs::write(p, "").map_err(|e| io_err(p, e))?;
        }
        actor.flush();
        tokio::spawn(actor.run(rx, config.tick_interval));
        Ok(Self { tx, view })
    }

    pub fn snapshot(&self) -> Arc<Published> {
        self.view.borrow().clone()
    }

    async fn call<T>(&self, make: impl FnOnce(Reply<T>) -> Msg) -> Result<T, ApiError> {
        let (tx, rx) = oneshot::channel();
        self.tx.send(make(tx)).await.map_err(|_| ApiError::unavailable())?;
        rx.await.map_err(|_| ApiError::unavailable())?.map_err(ApiError::from)
    }

    pub async fn execute(&self, cmd: Command) -> Result<Outcome, ApiError> {
        self.call(|r| Msg::Exec(cmd, r)).await
    }

    /// Writes the shutdown record, flushes the log and persists state.
    pub async fn shutdown(&self, reason: &str) {
        let (tx, rx) = oneshot::channel();
        if self.tx.send(Msg::Shutdown(reason.to_string(), tx)).await.is_ok() {
            let _ = rx.await;
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    status: StatusCode,
    error: String,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            error: "validation_error".into(),
            message: message.into(),
        }
    }

    fn unavailable() -> Self {
        Self {
            status: StatusCode::SERVICE_UNAVAILABLE,
            error: "shutting_down".into(),
            message: "engine is not accepting commands".into(),
        }
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let status = match e.class() {
            ErrorClass::Validation => StatusCode::BAD_REQUEST,
            ErrorClass::NotFound => StatusCode::NOT_FOUND,
            ErrorClass::Conflict => StatusCode::CONFLICT,
            ErrorClass::Infeasible => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorClass::Io => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self {
            status,
            error: e.code().into(),
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("request body: {e}")))
}

type ApiResult<T> = Result<Json<T>, ApiError>;

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn state(State(app): State<AppState>) -> Json<StateView> {
    Json(app.snapshot().state.clone())
}

async fn resilience(State(app): State<AppState>) -> Json<ScoreRecord> {
    Json(app.snapshot().score.clone())
}

async fn history(State(app): State<AppState>) -> Json<Vec<ScoreRecord>> {
    Json(app.snapshot().history.clone())
}

async fn routes(State(app): State<AppState>) -> Json<Vec<CrewRoute>> {
    Json(app.snapshot().routes.clone())
}

#[derive(Deserialize)]
struct HotspotQuery {
    date: Option<String>,
}

async fn hotspots(State(app): State<AppState>, Query(q): Query<HotspotQuery>) -> ApiResult<RiskField> {
    let date = q
        .date
        .map(|d| d.parse::<NaiveDate>().map_err(|e| ApiError::bad_request(format!("date {d:?}: {e}"))))
        .transpose()?;
    Ok(Json(app.call(|r| Msg::Hotspots(date, r)).await?))
}

async fn events(State(app): State<AppState>, body: Bytes) -> ApiResult<Outcome> {
    let event: Event = parse_body(&body)?;
    Ok(Json(app.execute(Command::InjectEvent(event)).await?))
}

async fn tick(State(app): State<AppState>) -> ApiResult<Outcome> {
    Ok(Json(app.execute(Command::Tick).await?))
}

async fn search_routes(State(app): State<AppState>, body: Bytes) -> ApiResult<Outcome> {
    let req: RouteRequest = parse_body(&body)?;
    Ok(Json(app.execute(Command::RouteSearch(req)).await?))
}

async fn propose(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Outcome> {
    Ok(Json(app.execute(Command::RoutePropose { route: RouteId::new(id) }).await?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatorBody {
    operator: String,
}

async fn signoff(State(app): State<AppState>, UrlPath(id): UrlPath<String>, body: Bytes) -> ApiResult<Outcome> {
    let b: OperatorBody = parse_body(&body)?;
    let cmd = Command::RouteSignoff {
        route: RouteId::new(id),
        operator: b.operator,
    };
    Ok(Json(app.execute(cmd).await?))
}

async fn reject(State(app): State<AppState>, UrlPath(id): UrlPath<String>, body: Bytes) -> ApiResult<Outcome> {
    let b: OperatorBody = parse_body(&body)?;
    let cmd = Command::RouteReject {
        route: RouteId::new(id),
        operator: b.operator,
    };
    Ok(Json(app.execute(cmd).await?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RestorationBody {
    max_actions: usize,
}

async fn restoration(State(app): State<AppState>, body: Bytes) -> ApiResult<Outcome> {
    let b: RestorationBody = parse_body(&body)?;
    Ok(Json(
        app.execute(Command::RestorationSearch {
            max_actions: b.max_actions,
        })
        .await?,
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SwitchBody {
    edge: EdgeId,
    state: SwitchState,
}

async fn switch(State(app): State<AppState>, body: Bytes) -> ApiResult<Outcome> {
    let b: SwitchBody = parse_body(&body)?;
    Ok(Json(
        app.execute(Command::Switch {
            edge: b.edge,
            state: b.state,
        })
        .await?,
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryBody {
    text: String,
}

async fn query(State(app): State<AppState>, body: Bytes) -> ApiResult<rmt_core::assistant::Answer> {
    let b: QueryBody = parse_body(&body)?;
    Ok(Json(app.call(|r| Msg::Ask(b.text, r)).await?))
}

/// The `/v1` API, plus the console bundle at `/` when configured.
pub fn router(app: AppState, console_dir: Option<&Path>) -> Router {
    let v1 = Router::new()
        .route("/healthz", get(healthz))
        .route("/state", get(state))
        .route("/resilience", get(resilience))
        .route("/resilience/history", get(history))
        .route("/hotspots", get(hotspots))
        .route("/events", post(events))
        .route("/tick", post(tick))
        .route("/routes", get(routes))
        .route("/routes/search", post(search_routes))
        .route("/routes/{id}/propose", post(propose))
        .route("/routes/{id}/signoff", post(signoff))
        .route("/routes/{id}/reject", post(reject))
        .route("/restoration/search", post(restoration))
        .route("/switch", post(switch))
        .route("/query", post(query))
        .with_state(app);
    let router = Router::new().nest("/v1", v1);
    match console_dir {
        Some(dir) => router.fallback_service(ServeDir::new(dir)),
        None => router,
    }
}

async fn shutdown_signal() -> &'static str {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => "interrupt",
        _ = term => "terminate",
    }
}

/// Binds `addr` and serves until SIGINT or SIGTERM.
pub async fn serve(config: ServiceConfig, addr: &str) -> Result<(), ServiceError> {
    let app = AppState::start(config.clone())?;
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| ServiceError::Bind {
        addr: addr.to_string(),
        message: e.to_string(),
    })?;
    tracing::info!("listening on {addr}");
    let (reason_tx, reason_rx) = oneshot::channel();
    let shutdown = async move {
        let reason = shutdown_signal().await;
        let _ = reason_tx.send(reason);
    };
    axum::serve(listener, router(app.clone(), config.console_dir.as_deref()))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(|e| ServiceError::Io {
            path: addr.to_string(),
            message: e.to_string(),
        })?;
    let reason = reason_rx.await.unwrap_or("stopped");
    app.shutdown(reason).await;
    Ok(())
}
