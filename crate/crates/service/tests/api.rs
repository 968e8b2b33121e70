use std::path::PathBuf;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;

use vidsem_service::commands::{app_state, build_engine};
use vidsem_service::{router, AppState, ServiceConfig};

fn demo_config() -> ServiceConfig {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/demo");
    ServiceConfig {
        concepts: Some(dir.join("concepts.xml")),
        contexts: Some(dir.join("contexts.xml")),
        lexicon: Some(dir.join("lexicon.tsv")),
        shot_counts: Some(dir.join("shot_counts.tsv")),
        result_limit: 12,
        ..ServiceConfig::default()
    }
}

fn state_with(config: &ServiceConfig) -> AppState {
    app_state(build_engine(config).unwrap(), config)
}

fn app() -> Router {
    router(state_with(&demo_config()))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX)
        .await
        .unwrap();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes)
            .unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

async fn open(app: &Router, text: &str) -> (String, Value) {
    let (status, body) = call(app, "POST", "/sessions", Some(json!({ "text": text }))).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    (body["session_id"].as_str().unwrap().to_string(), body)
}

fn ids(results: &Value) -> Vec<String> {
    results
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["video_id"].as_str().unwrap().to_string())
        .collect()
}

fn concept_ids(candidates: &Value, n: usize) -> Vec<u64> {
    candidates
        .as_array()
        .unwrap()
        .iter()
        .take(n)
        .map(|c| c["concept_id"].as_u64().unwrap())
        .collect()
}

#[tokio::test]
async fn news_session_expands_and_ranks() {
    let app = app();
    let (id, body) = open(&app, "news").await;
    let names: Vec<&str> = body["candidates"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["concept_name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["News_Studio", "Anchorperson", "Reporters"]);

    let (status, ranked) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/confirm"),
        Some(json!({ "concept_ids": [89, 5] })),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{ranked}");
    assert_eq!(ranked["iteration"], 0);
    let results = ranked["results"].as_array().unwrap();
    assert!(!results.is_empty());
    let sims: Vec<f64> = results
        .iter()
        .map(|r| r["similarity"].as_f64().unwrap())
        .collect();
    assert!(sims.windows(2).all(|w| w[0] >= w[1]));
    for r in results {
        let explain = r["explain"].as_array().unwrap();
        assert!(!explain.is_empty());
        assert!(explain
            .iter()
            .all(|c| [89, 5].contains(&c["concept_id"].as_u64().unwrap())));
    }
}

#[tokio::test]
async fn feedback_on_iteration_zero_returns_iteration_one() {
    let app = app();
    let (id, body) = open(&app, "protest crowd").await;
    let chosen = concept_ids(&body["candidates"], 2);
    let (_, q0) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/confirm"),
        Some(json!({ "concept_ids": chosen })),
    )
    .await;
    let top = ids(&q0["results"]);
    let judgments: Vec<Value> = top
        .iter()
        .take(3)
        .enumerate()
        .map(|(i, v)| json!({ "video_id": v, "label": if i == 0 { "relevant" } else { "irrelevant" } }))
        .collect();
    let (status, q1) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/feedback"),
        Some(json!({ "judgments": judgments })),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{q1}");
    assert_eq!(q1["iteration"], 1);
    let first = q1["results"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["video_id"] == top[0].as_str())
        .unwrap();
    assert_eq!(first["judged"], "relevant");

    let (_, state) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(state["phase"], "ranking");
    assert_eq!(state["iteration"], 1);
    assert_eq!(state["history"].as_array().unwrap().len(), 2);
    // The previous iteration's query is carried as p_fb.
    assert_eq!(state["feedback"]["p_fb"], state["feedback"]["p_initial"]);
}

#[tokio::test]
async fn parallel_sessions_stay_independent() {
    let app = app();
    let (a, body) = open(&app, "animals").await;
    let (b, _) = open(&app, "animals").await;
    assert_ne!(a, b);
    let chosen = concept_ids(&body["candidates"], 4);
    let confirm = json!({ "concept_ids": chosen });
    let (_, qa) = call(
        &app,
        "POST",
        &format!("/sessions/{a}/confirm"),
        Some(confirm.clone()),
    )
    .await;
    let (_, qb) = call(
        &app,
        "POST",
        &format!("/sessions/{b}/confirm"),
        Some(confirm),
    )
    .await;
    assert_eq!(qa["results"], qb["results"]);

    // Opposite judgments of the same videos.
    let top = ids(&qa["results"]);
    let judge = |first: &str, rest: &str| -> Value {
        let js: Vec<Value> = top
            .iter()
            .take(4)
            .enumerate()
            .map(|(i, v)| json!({ "video_id": v, "label": if i == 0 { first } else { rest } }))
            .collect();
        json!({ "judgments": js })
    };
    let (ua, ub) = (
        format!("/sessions/{a}/feedback"),
        format!("/sessions/{b}/feedback"),
    );
    let (fa, fb) = tokio::join!(
        call(&app, "POST", &ua, Some(judge("relevant", "irrelevant"))),
        call(&app, "POST", &ub, Some(judge("irrelevant", "relevant"))),
    );
    assert_eq!((fa.0, fb.0), (StatusCode::OK, StatusCode::OK));
    assert_ne!(fa.1["results"], fb.1["results"]);

    let (_, sa) = call(&app, "GET", &format!("/sessions/{a}"), None).await;
    let (_, sb) = call(&app, "GET", &format!("/sessions/{b}"), None).await;
    assert_ne!(sa["feedback"]["current"], sb["feedback"]["current"]);
    assert_eq!(sa["judgments"][&top[0]], "relevant");
    assert_eq!(sb["judgments"][&top[0]], "irrelevant");
}

#[tokio::test]
async fn validation_errors_are_structured() {
    let app = app();
    let (id, _) = open(&app, "news").await;

    let (status, body) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/confirm"),
        Some(json!({ "concept_ids": [] })),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["code"], "no_concepts");

    let (status, body) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/confirm"),
        Some(json!({ "concept_ids": [89, 14, 9999] })),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["code"], "invalid_concepts");
    assert_eq!(body["error"]["details"]["concept_ids"], json!([14, 9999]));

    let (status, body) = call(
        &app,
        "POST",
        "/sessions",
        Some(json!({ "text": "the and of" })),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["code"], "empty_query");

    let (status, body) = call(&app, "POST", "/sessions", Some(json!({ "txt": "news" }))).await;
    assert!(status.is_client_error());
    assert_eq!(body["error"]["code"], "bad_request");

    let (status, body) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/feedback"),
        Some(json!({ "judgments": [{ "video_id": "shot100", "label": "relevant" }] })),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"]["code"], "not_confirmed");

    call(
        &app,
        "POST",
        &format!("/sessions/{id}/confirm"),
        Some(json!({ "concept_ids": [89] })),
    )
    .await;
    let (status, body) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/feedback"),
        Some(json!({ "judgments": [] })),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["code"], "no_judgments");
    let (status, body) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/feedback"),
        Some(json!({ "judgments": [{ "video_id": "nope", "label": "relevant" }] })),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["details"]["video_ids"], json!(["nope"]));

    for uri in ["/sessions/unknown", "/nothing-here"] {
        let (status, body) = call(&app, "GET", uri, None).await;
        assert_eq!(status, StatusCode::NOT_FOUND);
        assert!(body["error"]["code"].is_string());
    }
    let (status, body) = call(
        &app,
        "POST",
        "/sessions/unknown/confirm",
        Some(json!({ "concept_ids": [89] })),
    )
    .await;
    assert_eq!(
        (status, body["error"]["code"].as_str()),
        (StatusCode::NOT_FOUND, Some("session_not_found"))
    );
}

#[tokio::test]
async fn concurrent_writer_gets_conflict() {
    let state = state_with(&demo_config());
    let app = router(state.clone());
    let (id, _) = open(&app, "news").await;
    let guard = state.sessions.write(&id).unwrap();
    let (status, body) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/confirm"),
        Some(json!({ "concept_ids": [89] })),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"]["code"], "session_busy");
    drop(guard);
    let (status, _) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/confirm"),
        Some(json!({ "concept_ids": [89] })),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn sessions_expire_after_ttl() {
    let mut config = demo_config();
    config.session_ttl_secs = 1;
    let state = state_with(&config);
    let app = router(state.clone());
    let (id, _) = open(&app, "news").await;
    assert_eq!(
        call(&app, "GET", &format!("/sessions/{id}"), None).await.0,
        StatusCode::OK
    );
    tokio::time::sleep(Duration::from_millis(1100)).await;
    assert_eq!(
        call(&app, "GET", &format!("/sessions/{id}"), None).await.0,
        StatusCode::NOT_FOUND
    );
    assert!(state.sessions.is_empty());
}

#[tokio::test]
async fn arabic_session_matches_english() {
    let app = app();
    let (ar, ar_body) = open(&app, "أحداث ثورة الكرامة").await;
    let (en, en_body) = open(&app, "revolution events dignity").await;
    assert_eq!(ar_body["query"]["language"], "ar");
    let ca = concept_ids(&ar_body["candidates"], 2);
    assert_eq!(ca, concept_ids(&en_body["candidates"], 2));
    let (_, qa) = call(
        &app,
        "POST",
        &format!("/sessions/{ar}/confirm"),
        Some(json!({ "concept_ids": ca })),
    )
    .await;
    let (_, qe) = call(
        &app,
        "POST",
        &format!("/sessions/{en}/confirm"),
        Some(json!({ "concept_ids": ca })),
    )
    .await;
    assert_eq!(qa["results"][0]["video_id"], qe["results"][0]["video_id"]);
}

#[tokio::test]
async fn browse_concepts_and_contexts() {
    let app = app();
    let (status, concepts) = call(&app, "GET", "/concepts", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(concepts.as_array().unwrap().len(), 12);
    let dogs = concepts
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "Dogs")
        .unwrap();
    assert_eq!(dogs["contexts"][0]["context_name"], "Animal");

    let (_, contexts) = call(&app, "GET", "/contexts", None).await;
    let adult = contexts
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "Adult")
        .unwrap();
    assert!(adult["members"]
        .as_array()
        .unwrap()
        .iter()
        .any(|m| m["concept_name"] == "Anchorperson"));
}

#[tokio::test]
async fn keyframes_are_served_when_configured() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("shot100_1.jpg"), b"\xff\xd8fake").unwrap();
    let mut config = demo_config();
    config.keyframes_dir = Some(dir.path().to_path_buf());
    let app = router(state_with(&config));

    let resp = app
        .clone()
        .oneshot(
            Request::get("/keyframes/shot100_1")
                .body(Body::empty())
                .unwrap(),
        )
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()["content-type"], "image/jpeg");
    assert_eq!(
        call(&app, "GET", "/keyframes/shot999_1", None).await.0,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        call(&app, "GET", "/keyframes/..%2Fsecret", None).await.0,
        StatusCode::NOT_FOUND
    );

    let (id, _) = open(&app, "news").await;
    let (_, ranked) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/confirm"),
        Some(json!({ "concept_ids": [89, 5, 97] })),
    )
    .await;
    let with_url: Vec<&Value> = ranked["results"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r.get("keyframe_url").is_some())
        .collect();
    assert_eq!(with_url.len(), 1, "{ranked}");
    assert_eq!(with_url[0]["keyframe_url"], "/keyframes/shot100_1");
}
