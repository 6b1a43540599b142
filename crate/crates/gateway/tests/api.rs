use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use taskbot::dialogue::{screen_for, FsSessionStore, MemorySessionStore, Modality, Session, SessionStore};
use taskbot::response::HttpGenerator;
use taskbot_gateway::cli::{build_engine, EngineArgs};
use taskbot_gateway::{router, AppState};

fn memory_state() -> Arc<AppState> {
    AppState::new(Arc::new(build_engine(&EngineArgs::default()).unwrap()), Arc::new(MemorySessionStore::new()))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = match body {
        Some(b) => req.body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, v)
}

async fn open(app: &Router, id: &str) {
    let (s, v) = call(app, "POST", "/sessions", Some(json!({ "session_id": id }))).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
}

async fn say(app: &Router, id: &str, body: Value) -> Value {
    let (s, v) = call(app, "POST", &format!("/sessions/{id}/turn"), Some(body)).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    v
}

#[tokio::test]
async fn healthz_reports_counts() {
    let app = router(memory_state());
    let (s, v) = call(&app, "GET", "/healthz", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "ok");
    assert!(v["tasks"].as_u64().unwrap() > 0);
    assert_eq!(v["videos"], 6);
}

#[tokio::test]
async fn fresh_session_greets_on_welcome_screen() {
    let app = router(memory_state());
    open(&app, "w1").await;
    let v = say(&app, "w1", json!({})).await;
    assert_eq!(v["screen"]["screen_kind"], "WELCOME");
    assert_eq!(v["state"], "GREETING");
    assert!(!v["text"].as_str().unwrap().is_empty());
    assert!(v.get("debug").is_none());
}

#[tokio::test]
async fn tire_search_fills_results() {
    let app = router(memory_state());
    open(&app, "t1").await;
    say(&app, "t1", json!({})).await;
    let v = say(&app, "t1", json!({ "utterance": "how to change a tire", "debug": true })).await;
    assert_eq!(v["screen"]["screen_kind"], "SEARCH_RESULTS");
    assert!(!v["screen"]["items"].as_array().unwrap().is_empty());
    assert_eq!(v["debug"]["intent"], "SEARCH");
}

#[tokio::test]
async fn every_screen_matches_stored_state() {
    let state = memory_state();
    let app = router(Arc::clone(&state));
    open(&app, "c1").await;
    let script = [
        json!({}),
        json!({ "utterance": "how to change a tire" }),
        json!({ "tap_target": "option:1", "modality": "tap" }),
        json!({ "utterance": "start" }),
        json!({ "tap_target": "next" }),
        json!({ "utterance": "tell me a fun fact" }),
        json!({ "utterance": "close" }),
        json!({ "utterance": "stop" }),
    ];
    for body in script {
        let v = say(&app, "c1", body).await;
        let stored = state.store.get("c1").unwrap().unwrap();
        assert_eq!(v["state"], serde_json::to_value(stored.state()).unwrap());
        assert_eq!(v["screen"]["screen_kind"], serde_json::to_value(screen_for(&stored)).unwrap());
    }
    let (_, s) = call(&app, "GET", "/sessions/c1", None).await;
    assert_eq!(s["ended"], true);
    assert_eq!(s["history"].as_array().unwrap().len(), 8);
    let modality = |i: usize| s["history"][i]["modality"].clone();
    assert_eq!(
        (modality(1), modality(2)),
        (serde_json::to_value(Modality::Voice).unwrap(), serde_json::to_value(Modality::Tap).unwrap())
    );
}

#[tokio::test]
async fn busy_session_is_rejected() {
    let state = memory_state();
    let app = router(Arc::clone(&state));
    open(&app, "b1").await;
    let guard = state.lock_session("b1").unwrap();
    let (s, v) = call(&app, "POST", "/sessions/b1/turn", Some(json!({ "utterance": "hello" }))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["error"], "session_busy");
    open(&app, "b2").await;
    say(&app, "b2", json!({})).await;
    drop(guard);
    say(&app, "b1", json!({})).await;
}

#[tokio::test]
async fn concurrent_turns_on_one_session_never_interleave() {
    let state = memory_state();
    let app = router(Arc::clone(&state));
    open(&app, "race").await;
    let mut handles = Vec::new();
    for _ in 0..16 {
        let app = app.clone();
        handles.push(tokio::spawn(async move {
            call(&app, "POST", "/sessions/race/turn", Some(json!({ "utterance": "hello" }))).await.0
        }));
    }
    let mut ok = 0;
    for h in handles {
        let s = h.await.unwrap();
        assert!(s == StatusCode::OK || s == StatusCode::CONFLICT, "{s}");
        ok += usize::from(s == StatusCode::OK);
    }
    let stored = state.store.get("race").unwrap().unwrap();
    assert_eq!(stored.history.len(), ok);
    stored.check_invariants().unwrap();
}

#[tokio::test]
async fn session_errors() {
    let app = router(memory_state());
    let (s, v) = call(&app, "POST", "/sessions/nope/turn", Some(json!({ "utterance": "hi" }))).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::NOT_FOUND, Some("session_not_found")));
    let (s, _) = call(&app, "GET", "/sessions/nope", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    open(&app, "dup").await;
    let (s, _) = call(&app, "POST", "/sessions", Some(json!({ "session_id": "dup" }))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, _) = call(&app, "POST", "/sessions", Some(json!({ "session_id": "../x" }))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let both = json!({ "utterance": "next", "tap_target": "next" });
    let (s, _) = call(&app, "POST", "/sessions/dup/turn", Some(both)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, v) = call(&app, "POST", "/sessions", None).await;
    assert_eq!(s, StatusCode::CREATED);
    assert!(v["session_id"].as_str().unwrap().starts_with("s-"));
}

#[tokio::test]
async fn restart_keeps_progress() {
    let dir = tempfile::tempdir().unwrap();
    let engine = Arc::new(build_engine(&EngineArgs::default()).unwrap());
    let first = router(AppState::new(Arc::clone(&engine), Arc::new(FsSessionStore::open(dir.path()).unwrap())));
    open(&first, "r1").await;
    for body in [json!({}), json!({ "utterance": "how to change a tire" }), json!({ "tap_target": "option:1" })] {
        say(&first, "r1", body).await;
    }
    let started = say(&first, "r1", json!({ "utterance": "start" })).await;
    assert_eq!(started["state"], "TASK_EXECUTION");
    let before: Session = FsSessionStore::open(dir.path()).unwrap().get("r1").unwrap().unwrap();
    drop(first);

    let second = router(AppState::new(engine, Arc::new(FsSessionStore::open(dir.path()).unwrap())));
    let (_, snapshot) = call(&second, "GET", "/sessions/r1", None).await;
    assert_eq!(snapshot, serde_json::to_value(&before).unwrap());
    let next = say(&second, "r1", json!({ "utterance": "next" })).await;
    assert_eq!(next["state"], "TASK_EXECUTION");
    assert!(next["text"].as_str().unwrap().starts_with("Step 2"), "{}", next["text"]);
}

#[tokio::test]
async fn search_endpoint() {
    let app = router(memory_state());
    let (s, v) = call(&app, "GET", "/search?q=apple%20crumble&k=3", None).await;
    assert_eq!(s, StatusCode::OK);
    let results = v["results"].as_array().unwrap();
    assert!(!results.is_empty() && results.len() <= 3);
    assert_eq!(results[0]["id"], "r-apple-crumble");
    assert_eq!(results[0]["title"], "Apple Crumble");
    let (s, _) = call(&app, "GET", "/search?q=%20", None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn video_endpoint() {
    let app = router(memory_state());
    let body = json!({ "q": "when did they preheat the oven" });
    let (s, v) = call(&app, "POST", "/videos/vid-apple-crumble/query", Some(body.clone())).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["timestamp_s"], 0.0);
    assert_eq!(v["seek"]["seek_to_s"], v["timestamp_s"]);
    assert_eq!(v["channel_ranks"]["lexical"], 1);
    let (s, _) = call(&app, "POST", "/videos/vid-missing/query", Some(body)).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn dead_generator_still_shows_overview() {
    let engine = build_engine(&EngineArgs::default()).unwrap().with_generator(Arc::new(HttpGenerator::with_timeout(
        "http://127.0.0.1:9/generate",
        std::time::Duration::from_millis(300),
    )));
    let app = router(AppState::new(Arc::new(engine), Arc::new(MemorySessionStore::new())));
    open(&app, "g1").await;
    say(&app, "g1", json!({})).await;
    say(&app, "g1", json!({ "utterance": "how to change a tire" })).await;
    let v = say(&app, "g1", json!({ "tap_target": "option:1" })).await;
    assert_eq!(v["state"], "TASK_OVERVIEW");
    assert_eq!(v["screen"]["screen_kind"], "INGREDIENTS_LIST");
}
