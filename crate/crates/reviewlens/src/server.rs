//! HTTP+JSON API. Routes and payloads are documented in `docs/api.md`.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::rejection::{JsonRejection, PathRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use chrono::NaiveDate;
use reviewlens_core::analytics::{prioritize, search, AnalyticsError, PrioritizedReview, ReviewQuery, RiverSlice, WordCloudEntry};
use reviewlens_core::pipeline::{ProjectConfig, SeedAddition, Snapshot, TopicResult, VersionResult};
use reviewlens_core::sentiment::{add_user_seeds, SeedLexicon, SentimentError};
use reviewlens_core::topics::TopicSummary;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::files::{self, FileKind, UploadReport, ValidationFailed};
use crate::project::{checksum, InputFiles, ProjectDir, StoredState};

/// Environment variable holding the listen address.
pub const ADDR_ENV: &str = "REVIEWLENS_ADDR";
pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";

const MAX_UPLOAD_BYTES: usize = 1 << 30;

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("{0} not found")]
    NotFound(String),
    #[error("no completed run yet")]
    NotReady,
    #[error(transparent)]
    InvalidRange(#[from] AnalyticsError),
    #[error(transparent)]
    ValidationFailed(#[from] ValidationFailed),
    #[error("a run is already in progress")]
    AlreadyRunning,
    #[error("{0}")]
    InvalidConfig(String),
    #[error(transparent)]
    InvalidSeeds(SentimentError),
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::NotFound(_) => "NotFound",
            Self::NotReady => "NotReady",
            Self::InvalidRange(_) => "InvalidRange",
            Self::ValidationFailed(_) => "ValidationFailed",
            Self::AlreadyRunning => "AlreadyRunning",
            Self::InvalidConfig(_) => "InvalidConfig",
            Self::InvalidSeeds(_) => "InvalidSeeds",
            Self::BadRequest(_) => "BadRequest",
            Self::Internal(_) => "Internal",
        }
    }

    fn status(&self) -> StatusCode {
        match self {
            Self::NotFound(_) => StatusCode::NOT_FOUND,
            Self::NotReady | Self::AlreadyRunning => StatusCode::CONFLICT,
            Self::ValidationFailed(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Self::InvalidRange(_) | Self::InvalidConfig(_) | Self::InvalidSeeds(_) | Self::BadRequest(_) => {
                StatusCode::BAD_REQUEST
            }
            Self::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl From<io::Error> for ApiError {
    fn from(e: io::Error) -> Self {
        Self::Internal(e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut error = json!({ "code": self.code(), "message": self.to_string() });
        if let Self::ValidationFailed(v) = &self {
            error["details"] = serde_json::to_value(v).expect("serializable");
        }
        (self.status(), Json(json!({ "error": error }))).into_response()
    }
}

macro_rules! bad_request_from {
    ($($t:ty),*) => {$(
        impl From<$t> for ApiError {
            fn from(e: $t) -> Self {
                Self::BadRequest(e.body_text())
            }
        }
    )*};
}
bad_request_from!(JsonRejection, PathRejection, QueryRejection);

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum RunStatus {
    Idle,
    Running,
    Done,
    Failed { reason: String },
}

/// A completed run as served to queries. Never mutated once published.
#[derive(Debug)]
pub struct Published {
    pub version: u64,
    pub checksum: String,
    pub snapshot: Snapshot,
}

#[derive(Debug)]
struct Inner {
    config: ProjectConfig,
    files: InputFiles,
    status: RunStatus,
    stale: bool,
    /// Bumped on every seed edit, so a run can tell whether seeds changed
    /// while it was in progress.
    seed_revision: u64,
}

#[derive(Debug)]
pub struct Project {
    id: String,
    dir: ProjectDir,
    inner: Mutex<Inner>,
    published: RwLock<Option<Arc<Published>>>,
}

impl Project {
    fn open(id: String, dir: ProjectDir) -> io::Result<Self> {
        let state = dir.state()?;
        let published = match dir.latest_snapshot()? {
            Some((version, doc)) => {
                let snapshot: Snapshot =
                    serde_json::from_str(&doc).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
                Some(Arc::new(Published {
                    version,
                    checksum: checksum(&doc),
                    snapshot,
                }))
            }
            None => None,
        };
        let inner = Inner {
            config: dir.config()?,
            files: dir.inputs()?,
            status: if published.is_some() { RunStatus::Done } else { RunStatus::Idle },
            stale: state.stale,
            seed_revision: 0,
        };
        Ok(Self {
            id,
            dir,
            inner: Mutex::new(inner),
            published: RwLock::new(published),
        })
    }

    fn inner(&self) -> std::sync::MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// The latest complete snapshot, if any.
    pub fn published(&self) -> Option<Arc<Published>> {
        self.published.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    fn ready(&self) -> ApiResult<Arc<Published>> {
        self.published().ok_or(ApiError::NotReady)
    }

    fn view(&self) -> ProjectView {
        let inner = self.inner();
        ProjectView {
            id: self.id.clone(),
            status: inner.status.clone(),
            snapshot_version: self.published().map_or(0, |p| p.version),
            stale: inner.stale,
            files: FileKind::ALL.into_iter().filter(|k| inner.files.get(*k).is_some()).collect(),
            config: inner.config.clone(),
        }
    }

    /// Marks the project running and returns what the run needs.
    fn begin_run(&self) -> ApiResult<(InputFiles, ProjectConfig, u64)> {
        let mut inner = self.inner();
        if inner.status == RunStatus::Running {
            return Err(ApiError::AlreadyRunning);
        }
        inner.status = RunStatus::Running;
        Ok((inner.files.clone(), inner.config.clone(), inner.seed_revision))
    }

    fn finish_run(&self, files: InputFiles, config: ProjectConfig, seed_revision: u64) {
        let outcome = files
            .run(&config)
            .map_err(|e| e.reason())
            .and_then(|(snapshot, doc)| self.publish(snapshot, &doc).map_err(|_| "IoError".to_string()));
        let mut inner = self.inner();
        match outcome {
            Ok(()) => {
                inner.status = RunStatus::Done;
                inner.stale = inner.seed_revision != seed_revision;
                let _ = self.save_state(&inner);
            }
            Err(reason) => inner.status = RunStatus::Failed { reason },
        }
    }

    fn publish(&self, snapshot: Snapshot, doc: &str) -> io::Result<()> {
        let version = self.published().map_or(0, |p| p.version) + 1;
        self.dir.write_snapshot(version, doc)?;
        let published = Arc::new(Published {
            version,
            checksum: checksum(doc),
            snapshot,
        });
        *self.published.write().unwrap_or_else(|e| e.into_inner()) = Some(published);
        Ok(())
    }

    fn save_state(&self, inner: &Inner) -> io::Result<()> {
        self.dir.save_state(StoredState {
            snapshot_version: self.published().map_or(0, |p| p.version),
            stale: inner.stale,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProjectView {
    pub id: String,
    pub status: RunStatus,
    pub snapshot_version: u64,
    pub stale: bool,
    pub files: Vec<FileKind>,
    pub config: ProjectConfig,
}

/// Shared server state: every project under one root directory.
#[derive(Debug)]
pub struct AppState {
    root: PathBuf,
    projects: RwLock<BTreeMap<String, Arc<Project>>>,
    next_id: AtomicU64,
}

impl AppState {
    /// Opens `root`, loading projects left by earlier sessions.
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Arc<Self>> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        let mut projects = BTreeMap::new();
        let mut max_id = 0;
        for entry in fs::read_dir(&root)? {
            let entry = entry?;
            let name = entry.file_name().to_string_lossy().into_owned();
            let Some(n) = name.strip_prefix('p').and_then(|n| n.parse::<u64>().ok()) else {
                continue;
            };
            if !entry.file_type()?.is_dir() {
                continue;
            }
            max_id = max_id.max(n);
            let project = Project::open(name.clone(), ProjectDir::create(entry.path())?)?;
            projects.insert(name, Arc::new(project));
        }
        Ok(Arc::new(Self {
            root,
            projects: RwLock::new(projects),
            next_id: AtomicU64::new(max_id + 1),
        }))
    }

    pub fn project(&self, id: &str) -> ApiResult<Arc<Project>> {
        self.projects
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("project {id}")))
    }

    fn create(&self) -> io::Result<Arc<Project>> {
        let id = format!("p{}", self.next_id.fetch_add(1, Ordering::SeqCst));
        let dir = ProjectDir::create(self.root.join(&id))?;
        dir.save_config(&ProjectConfig::default())?;
        let project = Arc::new(Project::open(id.clone(), dir)?);
        self.projects
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(id, project.clone());
        Ok(project)
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/projects", post(create_project).get(list_projects))
        .route("/projects/{id}", get(get_project))
        .route("/projects/{id}/files/{kind}", put(upload_file))
        .route("/projects/{id}/config", get(get_config).put(put_config))
        .route("/projects/{id}/seeds", put(put_seeds))
        .route("/projects/{id}/run", post(start_run))
        .route("/projects/{id}/status", get(get_status))
        .route("/projects/{id}/snapshot", get(get_snapshot))
        .route("/projects/{id}/river", get(get_river))
        .route("/projects/{id}/versions/{t}/topics/{k}", get(get_topic))
        .route("/projects/{id}/versions/{t}/topics/{k}/reviews", get(get_reviews))
        .route("/projects/{id}/versions/{t}/topics/{k}/wordcloud", get(get_wordcloud))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(state: Arc<AppState>, addr: &str) -> io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

type S = State<Arc<AppState>>;

async fn create_project(State(app): S) -> ApiResult<(StatusCode, Json<ProjectView>)> {
    let p = app.create()?;
    Ok((StatusCode::CREATED, Json(p.view())))
}

async fn list_projects(State(app): S) -> Json<Vec<ProjectView>> {
    let projects: Vec<_> = app
        .projects
        .read()
        .unwrap_or_else(|e| e.into_inner())
        .values()
        .cloned()
        .collect();
    Json(projects.iter().map(|p| p.view()).collect())
}

async fn get_project(State(app): S, path: Result<Path<String>, PathRejection>) -> ApiResult<Json<ProjectView>> {
    let Path(id) = path?;
    Ok(Json(app.project(&id)?.view()))
}

async fn upload_file(
    State(app): S,
    path: Result<Path<(String, String)>, PathRejection>,
    body: axum::body::Bytes,
) -> ApiResult<Json<UploadReport>> {
    let Path((id, kind)) = path?;
    let p = app.project(&id)?;
    let kind: FileKind = kind.parse().map_err(ApiError::NotFound)?;
    let text = String::from_utf8(body.to_vec()).map_err(|_| {
        ApiError::ValidationFailed(ValidationFailed {
            kind,
            reason: "file is not valid UTF-8".into(),
            orphan_ids: Vec::new(),
        })
    })?;
    let mut inner = p.inner();
    let ids = inner.files.reviews.as_deref().map(files::review_ids);
    let report = files::validate(kind, &text, ids.as_ref())?;
    p.dir.write(kind, &text)?;
    inner.files.set(kind, text);
    Ok(Json(report))
}

async fn get_config(State(app): S, path: Result<Path<String>, PathRejection>) -> ApiResult<Json<ProjectConfig>> {
    let Path(id) = path?;
    Ok(Json(app.project(&id)?.inner().config.clone()))
}

async fn put_config(
    State(app): S,
    path: Result<Path<String>, PathRejection>,
    body: Result<Json<ProjectConfig>, JsonRejection>,
) -> ApiResult<Json<ProjectConfig>> {
    let Path(id) = path?;
    let p = app.project(&id)?;
    let Json(config) = body.map_err(|e| ApiError::InvalidConfig(e.body_text()))?;
    config.validate().map_err(|e| ApiError::InvalidConfig(e.to_string()))?;
    let mut inner = p.inner();
    p.dir.save_config(&config)?;
    inner.config = config.clone();
    Ok(Json(config))
}

#[derive(Debug, Deserialize)]
struct SeedsBody {
    additions: Vec<SeedAddition>,
}

/// Merges seed additions into the config; the snapshot goes stale until
/// the next run.
async fn put_seeds(
    State(app): S,
    path: Result<Path<String>, PathRejection>,
    body: Result<Json<SeedsBody>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let Path(id) = path?;
    let p = app.project(&id)?;
    let Json(body) = body?;
    let request: Vec<_> = body.additions.iter().map(|s| (s.word.clone(), s.polarity)).collect();
    add_user_seeds(&SeedLexicon::default(), &request).map_err(ApiError::InvalidSeeds)?;

    let mut inner = p.inner();
    let mut config = inner.config.clone();
    for add in body.additions {
        config.seed_words.retain(|s| s.word != add.word);
        config.seed_words.push(add);
    }
    p.dir.save_config(&config)?;
    inner.config = config;
    inner.seed_revision += 1;
    if p.published().is_some() || inner.status == RunStatus::Running {
        inner.stale = true;
    }
    p.save_state(&inner)?;
    Ok(Json(json!({ "seed_words": inner.config.seed_words, "stale": inner.stale })))
}

async fn start_run(State(app): S, path: Result<Path<String>, PathRejection>) -> ApiResult<(StatusCode, Json<Value>)> {
    let Path(id) = path?;
    let p = app.project(&id)?;
    let (files, config, revision) = p.begin_run()?;
    let worker = p.clone();
    tokio::task::spawn_blocking(move || worker.finish_run(files, config, revision));
    Ok((StatusCode::ACCEPTED, Json(json!({ "status": RunStatus::Running }))))
}

async fn get_status(State(app): S, path: Result<Path<String>, PathRejection>) -> ApiResult<Json<Value>> {
    let Path(id) = path?;
    let view = app.project(&id)?.view();
    Ok(Json(json!({
        "status": view.status,
        "snapshot_version": view.snapshot_version,
        "stale": view.stale,
    })))
}

async fn get_snapshot(State(app): S, path: Result<Path<String>, PathRejection>) -> ApiResult<Response> {
    let Path(id) = path?;
    let p = app.project(&id)?;
    let published = p.ready()?;
    let doc = fs::read_to_string(p.dir.snapshot_path(published.version))?;
    Ok(([(header::CONTENT_TYPE, "application/json")], doc).into_response())
}

/// Identifies the snapshot a response was computed from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotRef {
    pub snapshot_version: u64,
    pub checksum: String,
    pub stale: bool,
}

fn snapshot_ref(p: &Project, published: &Published) -> SnapshotRef {
    SnapshotRef {
        snapshot_version: published.version,
        checksum: published.checksum.clone(),
        stale: p.inner().stale,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VersionInfo {
    pub index_t: usize,
    pub version: String,
    pub reviews: usize,
    pub unmodeled: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiverResponse {
    #[serde(flatten)]
    pub snapshot: SnapshotRef,
    pub k: usize,
    pub versions: Vec<VersionInfo>,
    pub slices: Vec<RiverSlice>,
}

async fn get_river(State(app): S, path: Result<Path<String>, PathRejection>) -> ApiResult<Json<RiverResponse>> {
    let Path(id) = path?;
    let p = app.project(&id)?;
    let published = p.ready()?;
    let s = &published.snapshot;
    Ok(Json(RiverResponse {
        snapshot: snapshot_ref(&p, &published),
        k: s.config.k,
        versions: s
            .versions
            .iter()
            .map(|v| VersionInfo {
                index_t: v.index_t,
                version: v.version.to_string(),
                reviews: v.reviews.len(),
                unmodeled: v.unmodeled.clone(),
            })
            .collect(),
        slices: s.river.clone(),
    }))
}

fn locate(published: &Published, t: usize, k: usize) -> ApiResult<(&VersionResult, &TopicResult)> {
    let v = published
        .snapshot
        .version(t)
        .ok_or_else(|| ApiError::NotFound(format!("version {t}")))?;
    let topic = v
        .topics
        .get(k)
        .ok_or_else(|| ApiError::NotFound(format!("topic {k} of version {t}")))?;
    Ok((v, topic))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopicResponse {
    #[serde(flatten)]
    pub snapshot: SnapshotRef,
    pub index_t: usize,
    pub version: String,
    pub emerging: bool,
    /// Representative sentences are to be highlighted (set for emerging
    /// topics).
    pub highlight_sentences: bool,
    pub summary: TopicSummary,
    pub word_cloud: Vec<WordCloudEntry>,
}

async fn get_topic(
    State(app): S,
    path: Result<Path<(String, usize, usize)>, PathRejection>,
) -> ApiResult<Json<TopicResponse>> {
    let Path((id, t, k)) = path?;
    let p = app.project(&id)?;
    let published = p.ready()?;
    let (v, topic) = locate(&published, t, k)?;
    Ok(Json(TopicResponse {
        snapshot: snapshot_ref(&p, &published),
        index_t: v.index_t,
        version: v.version.to_string(),
        emerging: topic.summary.emerging,
        highlight_sentences: topic.summary.emerging,
        summary: topic.summary.clone(),
        word_cloud: topic.word_cloud.clone(),
    }))
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct ReviewsParams {
    pub threshold: Option<f64>,
    pub text: Option<String>,
    pub min_rating: Option<f64>,
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
    pub offset: Option<usize>,
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReviewsResponse {
    #[serde(flatten)]
    pub snapshot: SnapshotRef,
    pub threshold: f64,
    /// Matches before `offset`/`limit` are applied.
    pub total: usize,
    pub offset: usize,
    pub reviews: Vec<PrioritizedReview>,
}

async fn get_reviews(
    State(app): S,
    path: Result<Path<(String, usize, usize)>, PathRejection>,
    query: Result<Query<ReviewsParams>, QueryRejection>,
) -> ApiResult<Json<ReviewsResponse>> {
    let Path((id, t, k)) = path?;
    let Query(q) = query?;
    let p = app.project(&id)?;
    let published = p.ready()?;
    let (v, topic) = locate(&published, t, k)?;
    let threshold = q.threshold.unwrap_or(published.snapshot.config.review_threshold);
    if !(0.0..=1.0).contains(&threshold) {
        return Err(ApiError::BadRequest("threshold must lie in [0, 1]".into()));
    }
    let listing = prioritize(&v.reviews, &v.theta, &topic.summary, threshold);
    let filtered = search(
        &listing,
        &ReviewQuery {
            text: q.text,
            min_rating: q.min_rating,
            from: q.from,
            to: q.to,
        },
    )?;
    let offset = q.offset.unwrap_or(0);
    let total = filtered.len();
    let reviews = filtered
        .into_iter()
        .skip(offset)
        .take(q.limit.unwrap_or(usize::MAX))
        .collect();
    Ok(Json(ReviewsResponse {
        snapshot: snapshot_ref(&p, &published),
        threshold,
        total,
        offset,
        reviews,
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WordCloudResponse {
    #[serde(flatten)]
    pub snapshot: SnapshotRef,
    pub entries: Vec<WordCloudEntry>,
}

async fn get_wordcloud(
    State(app): S,
    path: Result<Path<(String, usize, usize)>, PathRejection>,
) -> ApiResult<Json<WordCloudResponse>> {
    let Path((id, t, k)) = path?;
    let p = app.project(&id)?;
    let published = p.ready()?;
    let (_, topic) = locate(&published, t, k)?;
    Ok(Json(WordCloudResponse {
        snapshot: snapshot_ref(&p, &published),
        entries: topic.word_cloud.clone(),
    }))
}
