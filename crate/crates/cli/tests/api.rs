use std::path::Path;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use genderprobe_cli::server::{router, AppState};
use genderprobe_core::annotation::{AnnotationLabel, LabelStore};
use genderprobe_core::jsonl::read_jsonl;
use genderprobe_core::{Gender, MaskedSample};

fn samples() -> Vec<MaskedSample> {
    ["Someone lifts his bag.", "The cook stirs her soup.", "The pilot checks his watch."]
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let pronoun = if t.contains(" his ") { "his" } else { "her" };
            MaskedSample {
                id: format!("s{}", i + 1),
                original: (*t).to_owned(),
                masked: t.replacen(pronoun, "[MASK]", 1),
                pronoun: pronoun.into(),
                pronoun_gender: if pronoun == "his" { Gender::Male } else { Gender::Female },
                pronoun_token_index: 2,
                antecedent: None,
                coref_provider: "heuristic".into(),
                rejection_reason: None,
            }
        })
        .collect()
}

fn app(log: &Path, ui: Option<&Path>) -> Router {
    router(AppState::new(LabelStore::open(samples(), log).unwrap(), 2), ui)
}

async fn call(app: &Router, req: Request<Body>) -> (StatusCode, Value) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let body = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, body)
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn post_label(annotator: &str, sample: &str, biased: bool) -> Request<Body> {
    Request::post("/labels")
        .header("content-type", "application/json")
        .body(Body::from(
            json!({"annotator_id": annotator, "sample_id": sample, "biased": biased}).to_string(),
        ))
        .unwrap()
}

#[tokio::test]
async fn two_annotators_label_everything() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("labels.jsonl");
    let app = app(&log, None);

    for annotator in ["alice", "bob"] {
        loop {
            let (status, sample) = call(&app, get(&format!("/samples/next?annotator={annotator}"))).await;
            if status == StatusCode::NO_CONTENT {
                break;
            }
            assert_eq!(status, StatusCode::OK);
            assert!(sample["masked"].as_str().unwrap().contains("[MASK]"));
            assert!(sample["original"].is_string());
            let id = sample["id"].as_str().unwrap().to_owned();
            let biased = !(annotator == "bob" && id == "s3");
            let (status, ack) = call(&app, post_label(annotator, &id, biased)).await;
            assert_eq!(status, StatusCode::OK);
            assert_eq!(ack["sample_id"], id.as_str());
        }
    }

    let labels: Vec<AnnotationLabel> = read_jsonl(&log).unwrap();
    assert_eq!(labels.len(), 6);

    let (_, progress) = call(&app, get("/progress")).await;
    assert_eq!(progress["total_samples"], 3);
    assert_eq!(progress["labeled"]["alice"], 3);
    assert_eq!(progress["labeled"]["bob"], 3);

    let (status, report) = call(&app, get("/report")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(report["quorum"], 2);
    assert_eq!(report["n_biased"], 2);
    let acc = report["accuracy"].as_f64().unwrap();
    assert!((acc - 2.0 / 3.0).abs() < 1e-12);
}

#[tokio::test]
async fn next_follows_sample_order() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir.path().join("l.jsonl"), None);
    let (_, first) = call(&app, get("/samples/next?annotator=ann")).await;
    assert_eq!(first["id"], "s1");
    call(&app, post_label("ann", "s1", true)).await;
    let (_, next) = call(&app, get("/samples/next?annotator=ann")).await;
    assert_eq!(next["id"], "s2");
    let (_, other) = call(&app, get("/samples/next?annotator=other")).await;
    assert_eq!(other["id"], "s1");
}

#[tokio::test]
async fn relabeling_is_an_upsert_and_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("labels.jsonl");
    {
        let app = app(&log, None);
        let (_, ack) = call(&app, post_label("ann", "s1", true)).await;
        assert_eq!(ack["votes"], 1);
        let (_, ack) = call(&app, post_label("ann", "s1", false)).await;
        assert_eq!(ack["votes"], 1);
        call(&app, post_label("bob", "s1", false)).await;
    }
    let app = app(&log, None);
    let (_, report) = call(&app, get("/report")).await;
    let first = &report["consensus"][0];
    assert_eq!(first["sample_id"], "s1");
    assert_eq!(first["yes_votes"], 0);
    assert_eq!(first["total_votes"], 2);
}

#[tokio::test]
async fn bad_requests() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir.path().join("l.jsonl"), None);
    let (status, body) = call(&app, post_label("ann", "nope", true)).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(body["error"].as_str().unwrap().contains("nope"));
    let (status, _) = call(&app, post_label("  ", "s1", true)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(&app, get("/samples/next")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(&app, get("/samples/next?annotator=")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let malformed = Request::post("/labels")
        .header("content-type", "application/json")
        .body(Body::from("{\"annotator_id\": 1}"))
        .unwrap();
    let (status, _) = call(&app, malformed).await;
    assert!(status.is_client_error());
}

#[tokio::test]
async fn placeholder_without_ui_assets() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir.path().join("l.jsonl"), None);
    let (status, body) = call(&app, get("/")).await;
    assert_eq!(status, StatusCode::OK);
    assert!(body.as_str().unwrap().contains("--ui-dir"));
}

#[tokio::test]
async fn serves_ui_assets_when_configured() {
    let dir = tempfile::tempdir().unwrap();
    let ui = dir.path().join("ui");
    std::fs::create_dir(&ui).unwrap();
    std::fs::write(ui.join("index.html"), "<h1>review</h1>").unwrap();
    let app = app(&dir.path().join("l.jsonl"), Some(&ui));
    let (status, body) = call(&app, get("/")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, "<h1>review</h1>");
    let (status, _) = call(&app, get("/progress")).await;
    assert_eq!(status, StatusCode::OK);
}
