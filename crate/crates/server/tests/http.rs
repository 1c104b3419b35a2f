use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use memtrace_core::FixedClock;
use memtrace_server::http::router;
use memtrace_server::SessionManager;
use serde_json::{json, Value};
use tower::ServiceExt;

const DEMO: &str = include_str!("../../core/tests/corpus/demo.java");

struct App {
    router: Router,
    manager: Arc<SessionManager>,
    _dir: tempfile::TempDir,
}

fn app() -> App {
    let dir = tempfile::tempdir().unwrap();
    let manager = Arc::new(SessionManager::new(dir.path(), Arc::new(FixedClock(0))));
    App { router: router(manager.clone(), None), manager, _dir: dir }
}

impl App {
    async fn send(&self, req: Request<Body>) -> (StatusCode, String) {
        let resp = self.router.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        (status, String::from_utf8(bytes.to_vec()).unwrap())
    }

    async fn post(&self, uri: &str, body: Value) -> (StatusCode, Value) {
        let req = Request::post(uri)
            .header("content-type", "application/json")
            .body(Body::from(body.to_string()))
            .unwrap();
        let (status, text) = self.send(req).await;
        (status, serde_json::from_str(&text).unwrap())
    }

    async fn get(&self, uri: &str) -> (StatusCode, String) {
        self.send(Request::get(uri).body(Body::empty()).unwrap()).await
    }

    async fn create(&self, source: &str, dialect: &str, breakpoints: &[u32]) -> String {
        let (status, body) = self
            .post("/sessions", json!({ "source": source, "dialect": dialect, "breakpoints": breakpoints }))
            .await;
        assert_eq!(status, StatusCode::CREATED, "{body}");
        body["sessionId"].as_str().unwrap().to_string()
    }

    async fn command(&self, id: &str, action: &str, arg: Option<u64>) -> (StatusCode, Value) {
        self.post(&format!("/sessions/{id}/command"), json!({ "action": action, "arg": arg })).await
    }
}

fn main_rows(view: &Value) -> Vec<(String, String)> {
    view["sections"][0]["frames"][0]["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["name"].as_str().unwrap().to_string(), r["display"].as_str().unwrap().to_string()))
        .collect()
}

#[tokio::test]
async fn create_returns_paused_step_zero() {
    let app = app();
    let (status, body) = app
        .post("/sessions", json!({ "source": DEMO, "dialect": "java", "breakpoints": [10] }))
        .await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["step"], 0);
    assert_eq!(body["view"]["lineNumber"], 4);
    assert_eq!(body["view"]["finished"], false);
    let id = body["sessionId"].as_str().unwrap();
    let (_, info) = app.get(&format!("/sessions/{id}")).await;
    let info: Value = serde_json::from_str(&info).unwrap();
    assert_eq!(info["status"], "paused");
    assert_eq!(info["count"], 1);
}

#[tokio::test]
async fn empty_source_is_missing_main() {
    let app = app();
    let (status, body) = app.post("/sessions", json!({ "source": "", "dialect": "java" })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["message"], "missing main");
    assert_eq!(body["error"], "diagnostic");
}

#[tokio::test]
async fn syntax_error_has_position() {
    let app = app();
    let (status, body) = app.post("/sessions", json!({ "source": "int main() {\n  int = 2;\n}", "dialect": "cpp" })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!((body["line"].as_u64(), body["column"].as_u64()), (Some(2), Some(7)));
    assert_eq!(body["kind"], "syntax");
}

#[tokio::test]
async fn blank_line_breakpoint_is_named() {
    let app = app();
    let src = "int main() {\n\n    return 0;\n}\n";
    let (status, body) = app.post("/sessions", json!({ "source": src, "dialect": "cpp", "breakpoints": [2] })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["line"], 2);
    assert!(body["message"].as_str().unwrap().contains("line 2"));
}

#[tokio::test]
async fn stepping_to_the_end_of_main() {
    let app = app();
    let id = app.create(DEMO, "java", &[10]).await;
    let mut last = Value::Null;
    for _ in 0..6 {
        let (status, body) = app.command(&id, "stepOver", None).await;
        assert_eq!(status, StatusCode::OK);
        last = body;
    }
    let rows = main_rows(&last["view"]);
    for want in [("a", "5"), ("b", "70"), ("s", "\"Hello\"")] {
        assert!(rows.contains(&(want.0.to_string(), want.1.to_string())), "{rows:?}");
    }
    assert_eq!(last["step"], 6);
    assert_eq!(last["diff"]["createdVariables"], json!([{ "frame": "main#0", "name": "s" }]));
}

#[tokio::test]
async fn back_step_at_start_is_a_boundary() {
    let app = app();
    let id = app.create(DEMO, "java", &[]).await;
    let (status, body) = app.command(&id, "backStep", None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "boundary");
}

#[tokio::test]
async fn jump_then_forward_replays_the_original_view() {
    let app = app();
    let id = app.create(DEMO, "java", &[]).await;
    let mut original = Vec::new();
    for _ in 0..5 {
        original.push(app.command(&id, "stepOver", None).await.1);
    }
    app.command(&id, "jump", Some(2)).await;
    let (_, again) = app.command(&id, "forwardStep", None).await;
    assert_eq!(again["step"], 3);
    assert_eq!(again, original[2]);
}

#[tokio::test]
async fn live_step_from_history_is_rejected() {
    let app = app();
    let id = app.create(DEMO, "java", &[]).await;
    app.command(&id, "stepOver", None).await;
    app.command(&id, "stepOver", None).await;
    app.command(&id, "backStep", None).await;
    let (status, body) = app.command(&id, "stepInto", None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["message"], "navigate to latest first");
    app.command(&id, "forwardStep", None).await;
    assert_eq!(app.command(&id, "stepInto", None).await.0, StatusCode::OK);
}

#[tokio::test]
async fn finished_session_refuses_steps() {
    let app = app();
    let id = app.create("int main() {\n    return 0;\n}\n", "cpp", &[]).await;
    let (_, end) = app.command(&id, "run", None).await;
    assert_eq!(end["view"]["finished"], true);
    let (status, body) = app.command(&id, "stepOver", None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["message"], "session finished");
}

#[tokio::test]
async fn fault_is_reported_and_ends_the_session() {
    let app = app();
    let src = "int main() {\n    int z = 0;\n    int q = 5 / z;\n    return q;\n}\n";
    let id = app.create(src, "cpp", &[4]).await;
    let (_, body) = app.command(&id, "run", None).await;
    assert_eq!(body["view"]["fault"], "division by zero at line 3");
    let (_, info) = app.get(&format!("/sessions/{id}")).await;
    assert!(info.contains("\"status\":\"error\""));
    assert_eq!(app.command(&id, "stepOver", None).await.1["message"], "session finished");
}

#[tokio::test]
async fn view_reads_are_pure_and_filterable() {
    let app = app();
    let src = "\
class L {
    public static void main(String[] args) {
        Box keep = new Box();
        Box gone = new Box();
        gone = null;
    }
}
class Box { int v; }
";
    let id = app.create(src, "java", &[6]).await;
    app.command(&id, "run", None).await;
    let count = |info: String| serde_json::from_str::<Value>(&info).unwrap()["count"].clone();
    let before = count(app.get(&format!("/sessions/{id}")).await.1);

    let heap_len = |text: String| serde_json::from_str::<Value>(&text).unwrap()["sections"][1]["rows"].as_array().unwrap().len();
    let (status, filtered) = app.get(&format!("/sessions/{id}/view?filterHeap=true")).await;
    assert_eq!(status, StatusCode::OK);
    let (_, all) = app.get(&format!("/sessions/{id}/view?filterHeap=false")).await;
    assert_eq!((heap_len(filtered), heap_len(all)), (1, 2));
    let (_, first) = app.get(&format!("/sessions/{id}/view?step=0")).await;
    assert_eq!(heap_len(first), 0);

    assert_eq!(count(app.get(&format!("/sessions/{id}")).await.1), before);
}

#[tokio::test]
async fn demo_breakpoint_view_has_two_heap_rows() {
    let app = app();
    let id = app.create(DEMO, "java", &[10]).await;
    let (_, body) = app.command(&id, "run", None).await;
    let step = body["step"].as_u64().unwrap();
    let (_, view) = app.get(&format!("/sessions/{id}/view?step={step}&filterHeap=true&autoMinimize=true")).await;
    let view: Value = serde_json::from_str(&view).unwrap();
    let ids: Vec<_> = view["sections"][1]["rows"].as_array().unwrap().iter().map(|r| r["id"].clone()).collect();
    assert_eq!(ids, [json!("obj-2"), json!("obj-1")]);
}

#[tokio::test]
async fn snapshot_is_served_verbatim() {
    let app = app();
    let id = app.create(DEMO, "java", &[10]).await;
    app.command(&id, "run", None).await;
    let (status, text) = app.get(&format!("/sessions/{id}/snapshot/6")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(text, include_str!("../../core/tests/golden/demo_breakpoint.snapshot.json").trim_end());
    let dir = app.manager.get(&id).unwrap().trace_dir();
    let file = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.to_string_lossy().contains("-000006-"))
        .unwrap();
    assert_eq!(std::fs::read_to_string(file).unwrap(), text);
    assert_eq!(app.get(&format!("/sessions/{id}/snapshot/99")).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn unknown_session_and_bad_actions() {
    let app = app();
    assert_eq!(app.get("/sessions/nope/view").await.0, StatusCode::NOT_FOUND);
    let id = app.create(DEMO, "java", &[]).await;
    assert_eq!(app.command(&id, "teleport", None).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(app.command(&id, "jump", None).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(app.command(&id, "jump", Some(40)).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn skip_implicit_flag_changes_navigation() {
    let app = app();
    let src = "int f() {\n    int a = 1;\n    return a + 2;\n}\nint main() {\n    int r = f();\n    return r;\n}\n";
    let id = app.create(src, "cpp", &[]).await;
    app.command(&id, "stepOver", None).await;
    let (_, skipped) = app.command(&id, "backStep", None).await;
    assert_eq!(skipped["step"], 0);
    app.command(&id, "jump", Some(4)).await;
    let (_, body) = app
        .post(&format!("/sessions/{id}/command"), json!({ "action": "backStep", "skipImplicit": false }))
        .await;
    assert_eq!(body["step"], 3);
}

#[tokio::test]
async fn push_channel_matches_the_response() {
    let app = app();
    let id = app.create(DEMO, "java", &[]).await;
    let resp = app
        .router
        .clone()
        .oneshot(Request::get(format!("/sessions/{id}/events")).body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(resp.headers()["content-type"], "text/event-stream");
    let mut body = resp.into_body();

    let req = Request::post(format!("/sessions/{id}/command"))
        .header("content-type", "application/json")
        .body(Body::from(r#"{"action":"stepOver"}"#))
        .unwrap();
    let (_, response) = app.send(req).await;

    let mut pushed = String::new();
    while !pushed.contains("\n\n") {
        let frame = tokio::time::timeout(std::time::Duration::from_secs(5), body.frame())
            .await
            .expect("event within 5s")
            .unwrap()
            .unwrap();
        pushed.push_str(std::str::from_utf8(frame.data_ref().unwrap()).unwrap());
    }
    let data = pushed.lines().find_map(|l| l.strip_prefix("data: ")).unwrap();
    assert!(pushed.starts_with("event: step"));
    assert_eq!(data, response);
}
