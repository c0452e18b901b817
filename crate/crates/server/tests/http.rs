use std::fs;
use std::path::{Path, PathBuf};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use parley_server::{build_state, router, ServiceConfig};
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

fn demo_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../bots/demo")
}

struct Fixture {
    app: Router,
    bot: TempDir,
    _data: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let bot = tempfile::tempdir().unwrap();
        for entry in fs::read_dir(demo_dir()).unwrap() {
            let entry = entry.unwrap();
            fs::copy(entry.path(), bot.path().join(entry.file_name())).unwrap();
        }
        let data = tempfile::tempdir().unwrap();
        let config = ServiceConfig::parse(&format!(
            "bot_dir={}\ndata_dir={}\nbind_addr=127.0.0.1:0\n",
            bot.path().display(),
            data.path().display()
        ))
        .unwrap();
        let app = router(build_state(&config).unwrap());
        Self { app, bot, _data: data }
    }

    fn append_to(&self, file: &str, line: &str) {
        let path: &Path = &self.bot.path().join(file);
        let mut content = fs::read_to_string(path).unwrap();
        content.push_str(line);
        fs::write(path, content).unwrap();
    }

    async fn send(&self, method: &str, uri: &str, body: Option<&str>) -> (StatusCode, Value) {
        let request = Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json")
            .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
            .unwrap();
        let response = self.app.clone().oneshot(request).await.unwrap();
        let status = response.status();
        let bytes = response.into_body().collect().await.unwrap().to_bytes();
        let value = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
        };
        (status, value)
    }

    async fn chat(&self, id: &str, text: &str) -> (StatusCode, Value) {
        let body = json!({ "conversation_id": id, "text": text }).to_string();
        self.send("POST", "/v1/chat", Some(&body)).await
    }
}

#[tokio::test]
async fn chat_returns_reply_and_source() {
    let f = Fixture::new();
    let (status, body) = f.chat("c1", "hello").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["reply"], "Hello! How can I help you today?");
    assert_eq!(body["source"], "rule:intent");
    assert_eq!(body["rank_size"], 1);
    assert!(body.get("frame_debug").is_none());

    let (_, body) = f.chat("c1", "when was klm founded").await;
    assert_eq!(body["reply"], "1919.");
    assert_eq!(body["source"], "kb");
}

#[tokio::test]
async fn debug_frame_only_on_request() {
    let f = Fixture::new();
    let body = json!({ "conversation_id": "c1", "text": "I need a table in a pizzeria", "debug": true });
    let (status, body) = f.send("POST", "/v1/chat", Some(&body.to_string())).await;
    assert_eq!(status, StatusCode::OK);
    let frame = &body["frame_debug"];
    assert_eq!(frame["topic"], "food");
    assert_eq!(frame["top_intent"]["intent"], "book_restaurant");
    assert!(frame["top_intent"]["score"].as_f64().unwrap() > 0.99);
    assert_eq!(frame["resolved"], "I need a table in a pizzeria");
}

#[tokio::test]
async fn malformed_and_invalid_bodies_are_400() {
    let f = Fixture::new();
    for body in [
        "not json",
        "{}",
        r#"{"conversation_id":"c1"}"#,
        r#"{"conversation_id":"c1","text":5}"#,
    ] {
        let (status, value) = f.send("POST", "/v1/chat", Some(body)).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
        assert!(value["error"].is_string(), "{body}");
    }
    let (status, value) = f.chat("c1", "").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(value["error"].as_str().unwrap().contains("text"));
    let (status, _) = f.chat("no spaces allowed", "hi").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    // nothing was written for the rejected requests
    let (_, history) = f.send("GET", "/v1/conversations/c1/history", None).await;
    assert_eq!(history, json!([]));
}

#[tokio::test]
async fn history_is_chronological_and_limited() {
    let f = Fixture::new();
    let (status, body) = f.send("GET", "/v1/conversations/unknown/history", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!([]));

    f.chat("c1", "hello").await;
    f.chat("c1", "what is your name").await;
    let (_, body) = f.send("GET", "/v1/conversations/c1/history", None).await;
    let turns = body.as_array().unwrap();
    assert_eq!(turns.len(), 4);
    let texts: Vec<&str> = turns.iter().map(|t| t["raw"].as_str().unwrap()).collect();
    assert_eq!(
        texts,
        [
            "hello",
            "Hello! How can I help you today?",
            "what is your name",
            "I am DemoBot."
        ]
    );
    assert_eq!(turns[0]["speaker"], "user");
    assert_eq!(turns[0]["source"], Value::Null);
    assert_eq!(turns[3]["source"], "rule:backstory");

    let (_, body) = f.send("GET", "/v1/conversations/c1/history?limit=1", None).await;
    assert_eq!(body.as_array().unwrap().len(), 1);
    assert_eq!(body[0]["index"], 3);

    let (status, _) = f.send("GET", "/v1/conversations/c1/history?limit=-2", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = f.send("GET", "/v1/conversations/bad.id/history", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn health_names_the_bot() {
    let f = Fixture::new();
    let (status, body) = f.send("GET", "/healthz", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({ "status": "ok", "bot": "DemoBot" }));
}

#[tokio::test]
async fn unknown_route_is_404() {
    let f = Fixture::new();
    let (status, body) = f.send("GET", "/v2/nothing", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(body["error"].is_string());
}

#[tokio::test]
async fn reload_with_added_template() {
    let f = Fixture::new();
    let (_, before) = f.chat("c1", "do you like tulips").await;
    assert_ne!(before["source"], "rule:backstory");

    f.append_to(
        "templates.txt",
        "backstory\t-\t* like tulips *\tTulips are my favourite flower.\n",
    );
    let (status, body) = f.send("POST", "/v1/admin/reload", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["bot"], "DemoBot");

    let (_, after) = f.chat("c1", "do you like tulips").await;
    assert_eq!(after["source"], "rule:backstory");
    assert_eq!(after["reply"], "Tulips are my favourite flower.");
}

#[tokio::test]
async fn reload_same_directory_is_idempotent() {
    let f = Fixture::new();
    let (_, a) = f.chat("a", "tell me about gelato").await;
    let (status, _) = f.send("POST", "/v1/admin/reload", None).await;
    assert_eq!(status, StatusCode::OK);
    let (_, b) = f.chat("b", "tell me about gelato").await;
    assert_eq!(a, b);
}

#[tokio::test]
async fn failed_reload_is_409_and_keeps_old_bot() {
    let f = Fixture::new();
    f.append_to("triples.txt", "atlantis\tfounded_in\t9000\n");
    let (status, body) = f.send("POST", "/v1/admin/reload", None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let message = body["error"].as_str().unwrap();
    assert!(message.starts_with("triples.txt:"), "{message}");
    assert!(message.contains("atlantis"));

    let (status, body) = f.chat("c1", "when was klm founded").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["reply"], "1919.");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_conversations_do_not_interfere() {
    let f = Fixture::new();
    let lines = [
        "hello",
        "who is albert plesman",
        "when was he born",
        "fly to rome",
        "thanks",
    ];
    let mut tasks = Vec::new();
    for t in 0..24 {
        let app = f.app.clone();
        tasks.push(tokio::spawn(async move {
            // three tasks share each conversation id
            let id = format!("stress-{}", t % 8);
            for i in 0..8 {
                let body = json!({ "conversation_id": id, "text": lines[(t + i) % lines.len()] }).to_string();
                let request = Request::post("/v1/chat").body(Body::from(body)).unwrap();
                let response = app.clone().oneshot(request).await.unwrap();
                assert_eq!(response.status(), StatusCode::OK);
            }
        }));
    }
    for task in tasks {
        task.await.unwrap();
    }
    for c in 0..8 {
        let (_, body) = f
            .send("GET", &format!("/v1/conversations/stress-{c}/history"), None)
            .await;
        let turns = body.as_array().unwrap();
        assert_eq!(turns.len(), 48);
        for (i, turn) in turns.iter().enumerate() {
            assert_eq!(turn["index"], i as u64);
            assert_eq!(turn["speaker"], if i % 2 == 0 { "user" } else { "bot" });
            assert_eq!(turn["conversation_id"], format!("stress-{c}"));
        }
    }
}
