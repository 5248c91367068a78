use std::sync::Arc;
use std::time::Duration;

use futures_util::StreamExt;
use reqwest::StatusCode;
use serde_json::{json, Value};
use tokio_tungstenite::connect_async;

use voxchat::memory::{LogStore, SystemClock};
use voxchat::pipeline::{DemoProvider, Provider, ScriptedProvider};
use voxchat::session::SessionDeps;
use voxchat_server::{router, AppState};

const DUTCH_FLAG: &str = include_str!("../../core/tests/fixtures/dutch_flag_script.txt");

struct Server {
    base: String,
    client: reqwest::Client,
    _logs: tempfile::TempDir,
}

async fn serve(provider: Arc<dyn Provider>) -> Server {
    let logs = tempfile::tempdir().unwrap();
    let deps =
        SessionDeps::new(Arc::new(SystemClock)).with_provider(provider).with_store(LogStore::new(logs.path()).unwrap());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, router(AppState::new(deps))).await.unwrap() });
    Server { base: format!("http://{addr}"), client: reqwest::Client::new(), _logs: logs }
}

impl Server {
    async fn post(&self, path: &str, body: Value) -> (StatusCode, Value) {
        let r = self.client.post(format!("{}{path}", self.base)).json(&body).send().await.unwrap();
        (r.status(), r.json().await.unwrap_or(Value::Null))
    }

    async fn get(&self, path: &str) -> (StatusCode, Value) {
        let r = self.client.get(format!("{}{path}", self.base)).send().await.unwrap();
        (r.status(), r.json().await.unwrap_or(Value::Null))
    }

    async fn delete(&self, path: &str) -> (StatusCode, Value) {
        let r = self.client.delete(format!("{}{path}", self.base)).send().await.unwrap();
        (r.status(), r.json().await.unwrap_or(Value::Null))
    }

    async fn session(&self, mode: &str) -> String {
        let (status, body) = self.post("/sessions", json!({ "mode": mode })).await;
        assert_eq!(status, StatusCode::CREATED, "{body}");
        body["session_id"].as_str().unwrap().to_string()
    }

    async fn chat(&self, id: &str, text: &str) -> Value {
        let (status, body) = self.post(&format!("/sessions/{id}/chat"), json!({ "text": text })).await;
        assert_eq!(status, StatusCode::OK, "{body}");
        body
    }

    fn ws_url(&self, id: &str, from_seq: u64) -> String {
        format!("{}/sessions/{id}/events?from_seq={from_seq}", self.base.replace("http", "ws"))
    }

    /// Reads exactly `n` event frames.
    async fn events(&self, id: &str, from_seq: u64, n: usize) -> Vec<Value> {
        let (mut ws, _) = connect_async(self.ws_url(id, from_seq)).await.unwrap();
        let mut out = Vec::new();
        while out.len() < n {
            let frame =
                tokio::time::timeout(Duration::from_secs(5), ws.next()).await.expect("event frame").unwrap().unwrap();
            out.push(serde_json::from_str(frame.to_text().unwrap()).unwrap());
        }
        out
    }
}

fn demo() -> Arc<dyn Provider> {
    Arc::new(DemoProvider)
}

#[tokio::test]
async fn create_session_validates_config() {
    let server = serve(demo()).await;
    let (status, body) = server.post("/sessions", json!({ "mode": "command" })).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["api_version"], 1);
    assert_eq!(body["mode"], "command");
    assert_eq!(body["state"]["agent"], json!({ "x": 50, "y": 64, "z": 50 }));
    assert_eq!(body["state"]["weather"], "clear");

    for bad in [
        json!({ "mode": "banana" }),
        json!({}),
        json!({ "mode": "llm", "colour": 1 }),
        json!({ "mode": "command", "world_bound": 0 }),
    ] {
        let (status, body) = server.post("/sessions", bad.clone()).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{bad} -> {body}");
        assert!(body["error"].is_string());
    }
    let raw = server.client.post(format!("{}/sessions", server.base)).body("{not json").send().await.unwrap();
    assert_eq!(raw.status(), StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn command_mode_chat_and_state() {
    let server = serve(demo()).await;
    let id = server.session("command").await;

    let summary = server.chat(&id, "weather thunder").await;
    assert_eq!(summary["status"], "executed");
    let (_, state) = server.get(&format!("/sessions/{id}/state")).await;
    assert_eq!(state["weather"], "thunder");

    let typo = server.chat(&id, "weathr rain").await;
    assert_eq!(typo["status"], "rejected");
    assert!(typo["message"].as_str().unwrap().contains("weathr"));

    for line in ["place 50 64 51 stone 0", "place 51 64 50 glass 0", "place 49 64 50 wool 14"] {
        assert_eq!(server.chat(&id, line).await["status"], "executed");
    }
    let (_, state) = server.get(&format!("/sessions/{id}/state?radius=2")).await;
    assert_eq!(state["nearby_blocks"].as_array().unwrap().len(), 3);
    let (status, _) = server.get(&format!("/sessions/{id}/state?radius=-1")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, body) = server.post(&format!("/sessions/{id}/chat"), json!({ "text": "  " })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
}

#[tokio::test]
async fn llm_mode_dutch_flag_streams_twelve_cells() {
    let server = serve(Arc::new(ScriptedProvider::new([DUTCH_FLAG]))).await;
    let id = server.session("llm").await;
    let summary = server.chat(&id, "Bouw alstublieft een Nederlandse vlag").await;
    assert_eq!(summary["status"], "executed");
    assert_eq!(summary["attempts"], 1);
    let last = summary["last_seq"].as_u64().unwrap();

    let events = server.events(&id, 0, last as usize + 1).await;
    let seqs: Vec<u64> = events.iter().map(|e| e["seq"].as_u64().unwrap()).collect();
    assert_eq!(seqs, (0..=last).collect::<Vec<_>>());
    let cells: Vec<&Value> = events
        .iter()
        .filter(|e| e["kind"] == "world_delta")
        .flat_map(|e| e["payload"]["cells"].as_array().unwrap())
        .collect();
    assert_eq!(cells.len(), 12);
    assert!(cells.iter().all(|c| c["block"] == "wool"));
    assert_eq!(events.iter().filter(|e| e["kind"] == "command_executed").count(), 3);
    assert_eq!(events.last().unwrap()["kind"], "turn");
}

#[tokio::test]
async fn event_stream_replays_then_follows() {
    let server = serve(demo()).await;
    let id = server.session("command").await;
    for line in ["weather rain", "daytime night"] {
        server.chat(&id, line).await;
    }
    let (_, log) = server.get(&format!("/sessions/{id}/log")).await;
    assert_eq!(log["turns"].as_array().unwrap().len(), 4);

    let first = server.events(&id, 0, 5).await;
    let resumed_at = first[4]["seq"].as_u64().unwrap() + 1;
    let rest_url = server.ws_url(&id, resumed_at);
    let (mut ws, _) = connect_async(rest_url).await.unwrap();

    let all = server.events(&id, 0, 1).await;
    assert_eq!(all[0]["kind"], "chat");
    assert_eq!(all[0]["payload"]["from"], "system");

    let backlog_end = server.chat(&id, "weather clear").await["last_seq"].as_u64().unwrap();
    let mut resumed = Vec::new();
    while resumed.last().is_none_or(|&s| s < backlog_end) {
        let frame = tokio::time::timeout(Duration::from_secs(5), ws.next()).await.unwrap().unwrap().unwrap();
        let event: Value = serde_json::from_str(frame.to_text().unwrap()).unwrap();
        resumed.push(event["seq"].as_u64().unwrap());
    }
    assert_eq!(resumed, (resumed_at..=backlog_end).collect::<Vec<_>>());
    let combined: Vec<u64> = first.iter().map(|e| e["seq"].as_u64().unwrap()).chain(resumed).collect();
    assert_eq!(combined, (0..=backlog_end).collect::<Vec<_>>());
}

#[tokio::test]
async fn unknown_and_ended_sessions() {
    let server = serve(demo()).await;
    assert_eq!(server.post("/sessions/nope/chat", json!({ "text": "hi" })).await.0, StatusCode::NOT_FOUND);
    assert_eq!(server.get("/sessions/nope/state").await.0, StatusCode::NOT_FOUND);
    assert_eq!(server.get("/sessions/nope/log").await.0, StatusCode::NOT_FOUND);
    assert_eq!(server.delete("/sessions/nope").await.0, StatusCode::NOT_FOUND);
    assert!(connect_async(server.ws_url("nope", 0)).await.is_err());

    let id = server.session("command").await;
    server.chat(&id, "weather rain").await;
    let (status, end) = server.delete(&format!("/sessions/{id}")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(end["session_id"], id.as_str());
    let path = end["log_path"].as_str().unwrap();
    let lines = std::fs::read_to_string(path).unwrap();
    assert!(lines.lines().last().unwrap().contains("\"type\":\"end\""));

    let (status, _) = server.post(&format!("/sessions/{id}/chat"), json!({ "text": "weather clear" })).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(server.delete(&format!("/sessions/{id}")).await.0, StatusCode::CONFLICT);
    assert_eq!(server.get(&format!("/sessions/{id}/state")).await.0, StatusCode::OK);
}

#[tokio::test]
async fn overlapping_chats_serialize() {
    let server = Arc::new(serve(demo()).await);
    let id = server.session("command").await;
    let tasks: Vec<_> = (0..12)
        .map(|i| {
            let (server, id) = (server.clone(), id.clone());
            tokio::spawn(async move { server.chat(&id, &format!("place {} 64 10 stone 0", 10 + i)).await })
        })
        .collect();
    let mut ranges: Vec<(u64, u64)> = Vec::new();
    for t in tasks {
        let s = t.await.unwrap();
        assert_eq!(s["status"], "executed");
        ranges.push((s["first_seq"].as_u64().unwrap(), s["last_seq"].as_u64().unwrap()));
    }
    ranges.sort();
    assert!(ranges.windows(2).all(|w| w[0].1 + 1 == w[1].0), "turn events interleaved: {ranges:?}");

    let (_, state) = server.get(&format!("/sessions/{id}/state?radius=60")).await;
    assert_eq!(state["nearby_blocks"].as_array().unwrap().len(), 12);
    let (_, log) = server.get(&format!("/sessions/{id}/log")).await;
    let turns: Vec<u64> = log["turns"].as_array().unwrap().iter().map(|t| t["turn_index"].as_u64().unwrap()).collect();
    assert_eq!(turns, (0..24).collect::<Vec<_>>());
}

#[tokio::test]
async fn analytics_endpoint() {
    let server = serve(demo()).await;
    assert_eq!(server.get("/analytics").await.0, StatusCode::NOT_FOUND);

    let cmd = server.session("command").await;
    server.chat(&cmd, "weather rain").await;
    server.chat(&cmd, "build pyramid 20 64 20 5 3 stone").await;
    let llm = server.session("llm").await;
    server.chat(&llm, "make it thunder").await;

    let (status, report) = server.get("/analytics").await;
    assert_eq!(status, StatusCode::OK, "{report}");
    assert_eq!(report["session_count"], 2);
    assert_eq!(report["per_mode"]["command"]["commands_per_session"], 2.0);
    assert_eq!(report["per_mode"]["llm"]["session_count"], 1);

    let (_, only_llm) = server.get("/analytics?mode=llm").await;
    assert_eq!(only_llm["session_count"], 1);
    assert_eq!(server.get("/analytics?mode=banana").await.0, StatusCode::BAD_REQUEST);
    let (_, ids) = server.get("/sessions").await;
    assert_eq!(ids.as_array().unwrap().len(), 2);
}
