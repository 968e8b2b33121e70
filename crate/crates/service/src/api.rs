//! JSON-over-HTTP surface for the interactive search loop.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::json;
use vidsem_core::feedback::feedback_signs;
use vidsem_core::query::confirm;
use vidsem_core::retrieval::Contribution;
use vidsem_core::{ConceptCandidate, ConceptId, Engine, FeedbackState, Judgment, Label, Language};

use crate::sessions::{Access, HistoryEntry, Session, SessionStore};

#[derive(Debug, Clone)]
pub struct ApiSettings {
    pub alpha: f64,
    pub result_limit: usize,
    pub keyframes_dir: Option<PathBuf>,
}

#[derive(Clone)]
pub struct AppState {
    pub engine: Arc<Engine>,
    pub sessions: Arc<SessionStore>,
    pub settings: Arc<ApiSettings>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/confirm", post(confirm_concepts))
        .route("/sessions/{id}/feedback", post(submit_feedback))
        .route("/concepts", get(list_concepts))
        .route("/contexts", get(list_contexts))
        .route("/keyframes/{shot_id}", get(keyframe))
        .fallback(|| async {
            ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
        })
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    details: Option<serde_json::Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            details: None,
        }
    }

    fn unprocessable(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }

    fn with_details(mut self, details: serde_json::Value) -> Self {
        self.details = Some(details);
        self
    }

    fn session(access: Access, id: &str) -> Self {
        match access {
            Access::Missing => Self::new(
                StatusCode::NOT_FOUND,
                "session_not_found",
                format!("no session {id}"),
            ),
            Access::Busy => Self::new(
                StatusCode::CONFLICT,
                "session_busy",
                format!("session {id} is being updated by another request"),
            ),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut error = json!({ "code": self.code, "message": self.message });
        if let Some(details) = self.details {
            error["details"] = details;
        }
        (self.status, axum::Json(json!({ "error": error }))).into_response()
    }
}

impl From<vidsem_core::Error> for ApiError {
    fn from(e: vidsem_core::Error) -> Self {
        use vidsem_core::Error as E;
        match &e {
            E::EmptyQuery => Self::unprocessable("empty_query", e.to_string()),
            E::NothingChosen => Self::unprocessable("no_concepts", e.to_string()),
            E::UnknownVideos(ids) => Self::unprocessable("unknown_videos", e.to_string())
                .with_details(json!({ "video_ids": ids })),
            E::InvalidArgument(_) => Self::unprocessable("invalid_argument", e.to_string()),
            E::NotFound { .. } => Self::new(StatusCode::NOT_FOUND, "not_found", e.to_string()),
            _ => {
                log::error!("internal error: {e}");
                Self::new(
                    StatusCode::INTERNAL_SERVER_ERROR,
                    "internal",
                    "internal error",
                )
            }
        }
    }
}

/// `Json` extractor whose rejections use the structured error body.
pub struct Json<T>(pub T);

impl<S, T> FromRequest<S> for Json<T>
where
    axum::Json<T>: FromRequest<S, Rejection = JsonRejection>,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: axum::extract::Request, state: &S) -> Result<Self, Self::Rejection> {
        match axum::Json::<T>::from_request(req, state).await {
            Ok(axum::Json(v)) => Ok(Json(v)),
            Err(rejection) => Err(ApiError::new(
                rejection.status(),
                "bad_request",
                rejection.body_text(),
            )),
        }
    }
}

impl<T: Serialize> IntoResponse for Json<T> {
    fn into_response(self) -> Response {
        axum::Json(self.0).into_response()
    }
}

#[derive(Debug, Deserialize)]
pub struct CreateSession {
    pub text: String,
    #[serde(default)]
    pub lang: Option<Language>,
}

#[derive(Debug, Serialize)]
pub struct CandidateView {
    pub concept_id: ConceptId,
    pub concept_name: String,
    pub score: f64,
    pub matched_terms: Vec<String>,
    pub context_boost: f64,
}

#[derive(Debug, Deserialize)]
pub struct ConfirmRequest {
    pub concept_ids: Vec<ConceptId>,
    #[serde(default)]
    pub limit: Option<usize>,
}

#[derive(Debug, Deserialize)]
pub struct FeedbackRequest {
    pub judgments: Vec<Judgment>,
    #[serde(default)]
    pub limit: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct ResultView {
    pub rank: usize,
    pub video_id: String,
    pub similarity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub keyframe_url: Option<String>,
    pub explain: Vec<Contribution>,
    /// Latest label the session's user gave this video, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub judged: Option<Label>,
}

#[derive(Debug, Serialize)]
pub struct RankingResponse {
    pub session_id: String,
    pub iteration: usize,
    pub results: Vec<ResultView>,
}

fn candidate_views(engine: &Engine, candidates: &[ConceptCandidate]) -> Vec<CandidateView> {
    candidates
        .iter()
        .map(|c| CandidateView {
            concept_id: c.concept_id,
            concept_name: engine
                .index
                .concept(c.concept_id)
                .map(|k| k.name.clone())
                .unwrap_or_default(),
            score: c.score,
            matched_terms: c.matched_terms.clone(),
            context_boost: c.context_boost,
        })
        .collect()
}

const KEYFRAME_EXTENSIONS: &[(&str, &str)] = &[
    ("jpg", "image/jpeg"),
    ("jpeg", "image/jpeg"),
    ("png", "image/png"),
    ("webp", "image/webp"),
];

fn safe_shot_id(shot_id: &str) -> bool {
    !shot_id.is_empty()
        && !shot_id.starts_with('.')
        && shot_id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c))
}

fn keyframe_file(dir: &std::path::Path, shot_id: &str) -> Option<(PathBuf, &'static str)> {
    if !safe_shot_id(shot_id) {
        return None;
    }
    KEYFRAME_EXTENSIONS
        .iter()
        .map(|(ext, mime)| (dir.join(format!("{shot_id}.{ext}")), *mime))
        .find(|(p, _)| p.is_file())
}

impl AppState {
    /// The video's first annotated shot of its strongest contributing concept
    /// that has a keyframe on disk.
    fn keyframe_url(&self, video_id: &str, explain: &[Contribution]) -> Option<String> {
        let dir = self.settings.keyframes_dir.as_deref()?;
        let mut by_product: Vec<&Contribution> = explain.iter().collect();
        by_product.sort_by(|a, b| b.product.total_cmp(&a.product));
        by_product.iter().find_map(|c| {
            let concept = self.engine.index.concept(c.concept_id).ok()?;
            concept
                .shots
                .iter()
                .filter(|s| s.video_id == video_id)
                .find(|s| keyframe_file(dir, &s.shot_id).is_some())
                .map(|s| format!("/keyframes/{}", s.shot_id))
        })
    }

    fn rank_session(
        &self,
        session: &mut Session,
        limit: Option<usize>,
    ) -> Result<RankingResponse, ApiError> {
        let state = session
            .feedback
            .as_ref()
            .expect("ranked sessions have feedback state");
        let limit = limit.unwrap_or(self.settings.result_limit);
        if limit == 0 {
            return Err(ApiError::unprocessable(
                "invalid_argument",
                "limit must be at least 1",
            ));
        }
        let ranked = self.engine.rank(&state.current, limit)?;
        let iteration = state.iteration;
        session.history.push(HistoryEntry {
            iteration,
            video_ids: ranked.iter().map(|r| r.video_id.clone()).collect(),
        });
        let results = ranked
            .into_iter()
            .map(|r| ResultView {
                keyframe_url: self.keyframe_url(&r.video_id, &r.contributing_concepts),
                judged: session.judgments.get(&r.video_id).copied(),
                rank: r.rank,
                video_id: r.video_id,
                similarity: r.similarity,
                explain: r.contributing_concepts,
            })
            .collect();
        Ok(RankingResponse {
            session_id: session.session_id.clone(),
            iteration,
            results,
        })
    }
}

async fn create_session(
    State(app): State<AppState>,
    Json(req): Json<CreateSession>,
) -> Result<(StatusCode, Json<serde_json::Value>), ApiError> {
    let (query, candidates) = app.engine.expand(&req.text, req.lang)?;
    let session_id = uuid::Uuid::new_v4().to_string();
    let body = json!({
        "session_id": session_id,
        "query": query,
        "candidates": candidate_views(&app.engine, &candidates),
    });
    app.sessions
        .insert(Session::new(session_id, query, candidates));
    Ok((StatusCode::CREATED, Json(body)))
}

async fn get_session(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let handle = app
        .sessions
        .read(&id)
        .map_err(|a| ApiError::session(a, &id))?;
    let session = handle.lock();
    let phase = if session.feedback.is_some() {
        "ranking"
    } else {
        "expanded"
    };
    let mut body = serde_json::to_value(&*session).map_err(|e| {
        log::error!("serializing session: {e}");
        ApiError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "internal",
            "internal error",
        )
    })?;
    body["phase"] = json!(phase);
    body["iteration"] = json!(session.feedback.as_ref().map(|f| f.iteration));
    body["candidates"] = json!(candidate_views(&app.engine, &session.candidates));
    Ok(Json(body))
}

async fn confirm_concepts(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<ConfirmRequest>,
) -> Result<Json<RankingResponse>, ApiError> {
    if req.concept_ids.is_empty() {
        return Err(ApiError::unprocessable(
            "no_concepts",
            "concept_ids must not be empty",
        ));
    }
    let mut session = app
        .sessions
        .write(&id)
        .map_err(|a| ApiError::session(a, &id))?;
    let invalid: Vec<ConceptId> = req
        .concept_ids
        .iter()
        .copied()
        .filter(|c| !session.candidates.iter().any(|k| k.concept_id == *c))
        .collect();
    if !invalid.is_empty() {
        return Err(ApiError::unprocessable(
            "invalid_concepts",
            "concept_ids must be chosen from the session's candidates",
        )
        .with_details(json!({ "concept_ids": invalid })));
    }
    let p_initial = confirm(&session.candidates, &req.concept_ids)?;
    // Confirming again restarts the session from iteration 0.
    session.feedback = Some(FeedbackState::new(p_initial, app.settings.alpha)?);
    session.confirmed = req.concept_ids.clone();
    session.history.clear();
    session.judgments.clear();
    Ok(Json(app.rank_session(&mut session, req.limit)?))
}

async fn submit_feedback(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<FeedbackRequest>,
) -> Result<Json<RankingResponse>, ApiError> {
    if req.judgments.is_empty() {
        return Err(ApiError::unprocessable(
            "no_judgments",
            "judgments must not be empty",
        ));
    }
    let mut session = app
        .sessions
        .write(&id)
        .map_err(|a| ApiError::session(a, &id))?;
    let Some(state) = session.feedback.as_ref() else {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "not_confirmed",
            "confirm concepts before submitting feedback",
        ));
    };
    let signs = feedback_signs(&req.judgments, &app.engine.matrix)?;
    let next = state.advance(&signs);
    session.feedback = Some(next);
    for j in &req.judgments {
        session.judgments.insert(j.video_id.clone(), j.label);
    }
    Ok(Json(app.rank_session(&mut session, req.limit)?))
}

async fn list_concepts(State(app): State<AppState>) -> Json<Vec<serde_json::Value>> {
    let index = &app.engine.index;
    Json(
        index
            .concepts()
            .map(|c| {
                json!({
                    "concept_id": c.id,
                    "name": c.name,
                    "video_count": index.videos_of_concept(c.id).map(|v| v.len()).unwrap_or(0),
                    "shot_count": c.shots.len(),
                    "contexts": index.context_of_concept(c.id).unwrap_or_default(),
                })
            })
            .collect(),
    )
}

async fn list_contexts(State(app): State<AppState>) -> Json<serde_json::Value> {
    let index = &app.engine.index;
    let names: BTreeMap<ConceptId, &str> =
        index.concepts().map(|c| (c.id, c.name.as_str())).collect();
    Json(json!(index
        .contexts()
        .iter()
        .map(|ctx| json!({
            "num": ctx.num,
            "name": ctx.name,
            "members": ctx.members.iter().map(|m| json!({
                "concept_id": m.concept_id,
                "concept_name": names.get(&m.concept_id),
                "weight": m.weight,
            })).collect::<Vec<_>>(),
        }))
        .collect::<Vec<_>>()))
}

async fn keyframe(
    State(app): State<AppState>,
    Path(shot_id): Path<String>,
) -> Result<Response, ApiError> {
    let missing = || {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "keyframe_not_found",
            format!("no keyframe for {shot_id}"),
        )
    };
    let dir = app.settings.keyframes_dir.as_deref().ok_or_else(missing)?;
    let (path, mime) = keyframe_file(dir, &shot_id).ok_or_else(missing)?;
    let bytes = tokio::fs::read(&path).await.map_err(|e| {
        log::warn!("reading {}: {e}", path.display());
        missing()
    })?;
    Ok(([(header::CONTENT_TYPE, mime)], bytes).into_response())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shot_ids_cannot_escape_the_keyframe_dir() {
        assert!(safe_shot_id("shot1176_10"));
        for bad in ["", "../etc", "a/b", ".hidden", "a\\b", "shot%2F"] {
            assert!(!safe_shot_id(bad), "{bad}");
        }
    }

    #[test]
    fn core_errors_map_to_statuses() {
        let e: ApiError = vidsem_core::Error::EmptyQuery.into();
        assert_eq!(
            (e.status, e.code),
            (StatusCode::UNPROCESSABLE_ENTITY, "empty_query")
        );
        let e: ApiError = vidsem_core::Error::UnknownVideos(vec!["x".into()]).into();
        assert_eq!(e.details, Some(json!({ "video_ids": ["x"] })));
        let e: ApiError = vidsem_core::Error::Snapshot("boom".into()).into();
        assert_eq!(e.status, StatusCode::INTERNAL_SERVER_ERROR);
        assert!(!e.message.contains("boom"));
    }
}
