use std::path::Path;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use fsmkit::{
    fixtures, save_document, InvariantBinding, Machine, MachineDocument, Metadata, TracePayload,
    Word,
};
use fsmkit_service::{app, ServiceConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Client {
    app: Router,
}

impl Client {
    fn new(root: &Path) -> Self {
        Client {
            app: app(&ServiceConfig {
                root: root.to_path_buf(),
                assets: None,
            }),
        }
    }

    async fn raw(&self, method: Method, uri: &str, body: Option<String>) -> (StatusCode, String) {
        let request = Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json")
            .body(body.map_or_else(Body::empty, Body::from))
            .unwrap();
        let response = self.app.clone().oneshot(request).await.unwrap();
        let status = response.status();
        let bytes = response.into_body().collect().await.unwrap().to_bytes();
        (status, String::from_utf8(bytes.to_vec()).unwrap())
    }

    async fn call(&self, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let (status, text) = self.raw(method, uri, body.map(|b| b.to_string())).await;
        let value = if text.is_empty() {
            Value::Null
        } else {
            serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}"))
        };
        (status, value)
    }

    async fn post(&self, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        self.call(Method::POST, uri, body).await
    }

    async fn create(&self, body: Option<Value>) -> String {
        let (status, view) = self.post("/api/sessions", body).await;
        assert_eq!(status, StatusCode::CREATED, "{view}");
        view["id"].as_str().unwrap().to_string()
    }

    async fn edit(&self, id: &str, edit: Value) -> (StatusCode, Value) {
        self.post(&format!("/api/sessions/{id}/edit"), Some(edit))
            .await
    }
}

fn document(name: &str, machine: Machine, invariants: InvariantBinding) -> String {
    save_document(
        &MachineDocument::new(name.parse().unwrap(), machine, invariants, Metadata::now()).unwrap(),
    )
}

fn a_star_a_document() -> String {
    document("a*a", fixtures::a_star_a(), fixtures::a_star_a_invariants())
}

async fn run_with_tape(client: &Client, id: &str, tape: &str) -> Value {
    let (status, _) = client
        .call(
            Method::PUT,
            &format!("/api/sessions/{id}/tape"),
            Some(json!({ "tape": tape })),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    let (status, view) = client.post(&format!("/api/sessions/{id}/run"), None).await;
    assert_eq!(status, StatusCode::OK, "{view}");
    view
}

async fn step(client: &Client, id: &str, times: usize) -> Value {
    let mut view = Value::Null;
    for _ in 0..times {
        let (status, v) = client
            .post(&format!("/api/sessions/{id}/step/forward"), None)
            .await;
        assert_eq!(status, StatusCode::OK, "{v}");
        view = v;
    }
    view
}

#[tokio::test]
async fn stepping_a_star_a_shows_holding_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let client = Client::new(dir.path());
    let id = client
        .create(Some(json!({ "document": a_star_a_document() })))
        .await;
    let view = run_with_tape(&client, &id, "a a b a b a").await;
    assert_eq!(view["trace"]["cursor"], 0);
    assert_eq!(view["dirty"], false);

    let view = step(&client, &id, 4).await;
    let t = &view["trace"];
    assert_eq!(t["state"], "F");
    assert_eq!(t["verdict"], "holds");
    assert_eq!(t["consumed"], json!(["a", "a", "b", "a"]));
    assert_eq!(t["unconsumed"], json!(["b", "a"]));
    assert_eq!(t["previous_state"], "A");
    assert_eq!(t["rule_used"], json!(["A", "a", "F"]));
    let index = t["rule_index"].as_u64().unwrap() as usize;
    assert_eq!(view["rules"][index], json!(["A", "a", "F"]));
}

#[tokio::test]
async fn buggy_machine_turns_red_in_the_dead_state() {
    let dir = tempfile::tempdir().unwrap();
    let client = Client::new(dir.path());
    let doc = document(
        "a*a-buggy",
        fixtures::a_star_a_buggy(),
        fixtures::a_star_a_buggy_invariants(),
    );
    let id = client.create(Some(json!({ "document": doc }))).await;
    run_with_tape(&client, &id, "a b b a b a").await;
    let before = step(&client, &id, 2).await;
    assert_eq!(before["trace"]["state"], "J");
    assert_eq!(before["trace"]["verdict"], "holds");
    let view = step(&client, &id, 1).await;
    assert_eq!(view["trace"]["state"], "ds");
    assert_eq!(view["trace"]["verdict"], "fails");
    assert_eq!(view["dead_state"], "ds");
}

#[tokio::test]
async fn stepping_past_either_end_is_a_conflict() {
    let dir = tempfile::tempdir().unwrap();
    let client = Client::new(dir.path());
    let id = client
        .create(Some(json!({ "document": a_star_a_document() })))
        .await;
    run_with_tape(&client, &id, "a b").await;

    let (status, body) = client
        .post(&format!("/api/sessions/{id}/step/back"), None)
        .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "conflict");

    let view = step(&client, &id, 2).await;
    assert_eq!(view["trace"]["at_end"], true);
    let (status, _) = client
        .post(&format!("/api/sessions/{id}/step/forward"), None)
        .await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (_, view) = client
        .call(Method::GET, &format!("/api/sessions/{id}"), None)
        .await;
    assert_eq!(view["trace"]["cursor"], 2);
}

#[tokio::test]
async fn edits_gate_stepping_and_gencode_until_the_next_run() {
    let dir = tempfile::tempdir().unwrap();
    let client = Client::new(dir.path());
    let id = client
        .create(Some(json!({ "document": a_star_a_document() })))
        .await;

    let (status, _) = client
        .post(&format!("/api/sessions/{id}/step/forward"), None)
        .await;
    assert_eq!(status, StatusCode::CONFLICT, "stepping before any run");
    let (status, _) = client
        .post(&format!("/api/sessions/{id}/gencode"), None)
        .await;
    assert_eq!(status, StatusCode::CONFLICT, "gencode before any run");

    run_with_tape(&client, &id, "a a").await;
    let (status, view) = client
        .edit(&id, json!({ "op": "toggle_final", "state": "A" }))
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(view["dirty"], true);
    assert_eq!(view["trace"], Value::Null);
    let (status, _) = client
        .post(&format!("/api/sessions/{id}/step/forward"), None)
        .await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, _) = client
        .post(&format!("/api/sessions/{id}/gencode"), None)
        .await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, _) = client
        .call(Method::GET, &format!("/api/sessions/{id}/trace"), None)
        .await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn nondeterministic_rule_is_unprocessable() {
    let dir = tempfile::tempdir().unwrap();
    let client = Client::new(dir.path());
    let id = client.create(None).await;
    for edit in [
        json!({ "op": "add_state", "state": "S" }),
        json!({ "op": "add_state", "state": "F" }),
        json!({ "op": "add_symbol", "symbol": "a" }),
        json!({ "op": "add_rule", "rule": ["S", "a", "F"] }),
    ] {
        let (status, body) = client.edit(&id, edit).await;
        assert_eq!(status, StatusCode::OK, "{body}");
    }
    let (status, body) = client
        .edit(&id, json!({ "op": "add_rule", "rule": ["S", "a", "S"] }))
        .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"], "invalid");
    let message = body["message"].as_str().unwrap();
    assert!(message.contains("(S a F) and (S a S)"), "{message}");
}

#[tokio::test]
async fn a_machine_built_from_scratch_runs() {
    let dir = tempfile::tempdir().unwrap();
    let client = Client::new(dir.path());
    let id = client.create(None).await;
    let (_, view) = client
        .call(Method::GET, &format!("/api/sessions/{id}"), None)
        .await;
    assert_eq!(view["machine"]["states"], json!([]));
    assert_eq!(view["rules"], json!([]));
    assert_eq!(view["tape"], json!([]));
    assert_eq!(view["trace"], Value::Null);

    let (status, body) = client.post(&format!("/api/sessions/{id}/run"), None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");

    for edit in [
        json!({ "op": "set_name", "name": "a*" }),
        json!({ "op": "add_state", "state": "S" }),
        json!({ "op": "add_state", "state": "F" }),
        json!({ "op": "add_symbol", "symbol": "a" }),
        json!({ "op": "add_symbol", "symbol": "b" }),
        json!({ "op": "set_start", "state": "S" }),
        json!({ "op": "toggle_final", "state": "F" }),
        json!({ "op": "add_rule", "rule": ["S", "a", "F"] }),
        json!({ "op": "add_rule", "rule": ["F", "a", "F"] }),
        json!({ "op": "add_rule", "rule": ["F", "b", "F"] }),
        json!({ "op": "set_invariant", "state": "F", "source": "(first= a)" }),
    ] {
        let (status, body) = client.edit(&id, edit).await;
        assert_eq!(status, StatusCode::OK, "{body}");
    }
    let (_, _) = client
        .call(
            Method::PUT,
            &format!("/api/sessions/{id}/tape"),
            Some(json!({ "tape": ["a", "b"] })),
        )
        .await;
    let (status, view) = client
        .post(
            &format!("/api/sessions/{id}/tape/append"),
            Some(json!({ "symbols": "a" })),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(view["tape"], json!(["a", "b", "a"]));
    let (_, view) = client.post(&format!("/api/sessions/{id}/run"), None).await;
    assert_eq!(view["trace"]["outcome"], "accept");
    assert_eq!(view["dead_state"], "ds");
    let view = step(&client, &id, 3).await;
    assert_eq!(view["trace"]["verdict"], "holds");

    let (status, view) = client
        .call(Method::DELETE, &format!("/api/sessions/{id}/tape"), None)
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(view["tape"], json!([]));
}

#[tokio::test]
async fn removing_a_state_cascades() {
    let dir = tempfile::tempdir().unwrap();
    let client = Client::new(dir.path());
    let id = client
        .create(Some(json!({ "document": a_star_a_document() })))
        .await;
    let (status, view) = client
        .edit(&id, json!({ "op": "remove_state", "state": "F" }))
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(view["machine"]["states"], json!(["S", "A"]));
    assert_eq!(view["machine"]["finals"], json!([]));
    assert_eq!(view["rules"], json!([["A", "b", "A"]]));
    assert!(view["invariants"].get("F").is_none());
    assert_eq!(view["dirty"], true);
}

#[tokio::test]
async fn gencode_twice_appends_two_revisions() {
    let dir = tempfile::tempdir().unwrap();
    let client = Client::new(dir.path());
    let id = client
        .create(Some(json!({ "document": a_star_a_document() })))
        .await;
    run_with_tape(&client, &id, "a").await;
    let (status, first) = client
        .post(&format!("/api/sessions/{id}/gencode"), None)
        .await;
    assert_eq!(status, StatusCode::OK, "{first}");
    let (_, second) = client
        .post(&format!("/api/sessions/{id}/gencode"), None)
        .await;
    assert_eq!(first["generated"]["revision"], 1);
    assert_eq!(second["generated"]["revision"], 2);
    assert!(first["generated"]["source"]
        .as_str()
        .unwrap()
        .starts_with("(define a*a (make-dfa '(S F A) '(a b) 'S '(F)"));

    let text = std::fs::read_to_string(dir.path().join("a*a.gen.rkt")).unwrap();
    let blocks = fsmkit::io::fsm_source::parse_fsm_blocks(&text).unwrap();
    assert_eq!(blocks.len(), 2);
    assert_eq!(blocks[1].header.unwrap().revision, 2);
    assert_eq!(blocks[1].document.machine, fixtures::a_star_a());
}

#[tokio::test]
async fn trace_payload_is_the_shared_rendering() {
    let dir = tempfile::tempdir().unwrap();
    let client = Client::new(dir.path());
    let id = client
        .create(Some(json!({ "document": a_star_a_document() })))
        .await;
    run_with_tape(&client, &id, "a b b a").await;
    step(&client, &id, 2).await;
    let (status, body) = client
        .raw(Method::GET, &format!("/api/sessions/{id}/trace"), None)
        .await;
    assert_eq!(status, StatusCode::OK);
    let expected = TracePayload::compute(
        &fixtures::a_star_a(),
        &fixtures::a_star_a_invariants(),
        &Word::parse("a b b a").unwrap(),
    )
    .unwrap()
    .to_json();
    assert_eq!(body, expected);
}

#[tokio::test]
async fn test_and_sweep_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let client = Client::new(dir.path());
    let doc = document(
        "a*a-buggy",
        fixtures::a_star_a_buggy(),
        fixtures::a_star_a_buggy_invariants(),
    );
    let id = client.create(Some(json!({ "document": doc }))).await;
    let (status, report) = client
        .post(
            &format!("/api/sessions/{id}/test"),
            Some(json!({ "n": 7, "seed": 3 })),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(report["entries"].as_array().unwrap().len(), 7);
    let (status, report) = client
        .post(&format!("/api/sessions/{id}/sweep"), None)
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        report["failures"],
        json!([]),
        "the cover words alone miss this bug"
    );
    let (status, report) = client
        .post(
            &format!("/api/sessions/{id}/sweep"),
            Some(json!({ "random": 200, "seed": 1 })),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(report["words_run"], 206);
    assert!(!report["failures"].as_array().unwrap().is_empty());
    assert_eq!(report["failures"][0]["state"], "ds");
}

#[tokio::test]
async fn documents_save_and_load() {
    let dir = tempfile::tempdir().unwrap();
    let client = Client::new(dir.path());
    let id = client
        .create(Some(json!({ "document": a_star_a_document() })))
        .await;
    let (status, saved) = client
        .post(&format!("/api/sessions/{id}/document/save"), None)
        .await;
    assert_eq!(status, StatusCode::OK, "{saved}");
    assert!(dir.path().join("a*a.fsmx").exists());

    let other = client.create(Some(json!({ "file": "a*a.fsmx" }))).await;
    let (_, a) = client
        .call(Method::GET, &format!("/api/sessions/{id}/document"), None)
        .await;
    let (_, b) = client
        .call(
            Method::GET,
            &format!("/api/sessions/{other}/document"),
            None,
        )
        .await;
    assert_eq!(a, b);

    let baba = document("baba", fixtures::baba(), InvariantBinding::new());
    let (status, view) = client
        .call(
            Method::PUT,
            &format!("/api/sessions/{other}/document"),
            Some(json!({ "document": baba })),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(view["machine"]["name"], "baba");

    let source = "(define a* (make-dfa '(S F) '(a b) 'S '(F) '((S a F) (F a F) (F b F))))";
    let from_source = client.create(Some(json!({ "source": source }))).await;
    let (_, view) = client
        .call(Method::GET, &format!("/api/sessions/{from_source}"), None)
        .await;
    assert_eq!(view["machine"]["name"], "a*");

    let (status, _) = client
        .post("/api/sessions", Some(json!({ "file": "../etc/passwd" })))
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn unknown_sessions_and_malformed_payloads() {
    let dir = tempfile::tempdir().unwrap();
    let client = Client::new(dir.path());
    let (status, body) = client.call(Method::GET, "/api/sessions/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "not_found");
    let (status, _) = client.post("/api/sessions/nope/run", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let id = client.create(None).await;
    let (status, _) = client
        .raw(
            Method::POST,
            &format!("/api/sessions/{id}/edit"),
            Some("{".into()),
        )
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = client.edit(&id, json!({ "op": "explode" })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = client
        .edit(&id, json!({ "op": "add_state", "state": "two words" }))
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = client
        .call(
            Method::PUT,
            &format!("/api/sessions/{id}/tape"),
            Some(json!({ "tape": ["z"] })),
        )
        .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = client
        .post("/api/sessions", Some(json!({ "document": "states = [" })))
        .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let (status, _) = client
        .call(Method::DELETE, &format!("/api/sessions/{id}"), None)
        .await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    let (status, _) = client
        .call(Method::GET, &format!("/api/sessions/{id}"), None)
        .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn sessions_are_independent() {
    let dir = tempfile::tempdir().unwrap();
    let client = Client::new(dir.path());
    let ids: Vec<String> = create_many(&client, 8).await;
    for (k, id) in ids.iter().enumerate() {
        let tape = vec!["a"; k + 1].join(" ");
        run_with_tape(&client, id, &tape).await;
    }
    for (k, id) in ids.iter().enumerate() {
        let (_, view) = client
            .call(Method::GET, &format!("/api/sessions/{id}"), None)
            .await;
        assert_eq!(view["trace"]["steps"], k + 2);
    }
}

async fn create_many(client: &Client, n: usize) -> Vec<String> {
    let mut ids = Vec::new();
    for _ in 0..n {
        ids.push(
            client
                .create(Some(json!({ "document": a_star_a_document() })))
                .await,
        );
    }
    ids
}
