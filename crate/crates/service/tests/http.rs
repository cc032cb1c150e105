use std::collections::BTreeMap;

use chrono::{Duration, Utc};
use hragent_core::schema::{parse_schema, TaskSchema};
use hragent_service::app::{router, ActionResponse, AppState};
use hragent_service::background::BackgroundServer;
use hragent_service::config::ServiceConfig;
use serde_json::{json, Value};

fn schemas() -> BTreeMap<String, TaskSchema> {
    [
        include_str!("../../../schemas/time_off.json"),
        include_str!("../../../schemas/set_status.json"),
    ]
    .into_iter()
    .map(|s| {
        let s = parse_schema(s).unwrap();
        (s.id.clone(), s)
    })
    .collect()
}

struct Client {
    agent: ureq::Agent,
    base: String,
    _server: BackgroundServer,
}

impl Client {
    fn start(cfg: &ServiceConfig) -> (Self, std::sync::Arc<AppState>) {
        let state = AppState::new(cfg, schemas()).unwrap();
        let server = BackgroundServer::start(router(state.clone())).unwrap();
        let agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        (
            Self {
                agent,
                base: server.url(),
                _server: server,
            },
            state,
        )
    }

    fn post_raw(&self, path: &str, body: &str) -> (u16, Value) {
        let mut r = self
            .agent
            .post(&format!("{}{path}", self.base))
            .header("content-type", "application/json")
            .send(body)
            .unwrap();
        (r.status().as_u16(), r.body_mut().read_json().unwrap_or(Value::Null))
    }

    fn post(&self, path: &str, body: Value) -> (u16, Value) {
        self.post_raw(path, &body.to_string())
    }

    fn get(&self, path: &str) -> (u16, Value) {
        let mut r = self.agent.get(&format!("{}{path}", self.base)).call().unwrap();
        (r.status().as_u16(), r.body_mut().read_json().unwrap_or(Value::Null))
    }

    fn create(&self) -> String {
        let (st, v) = self.post(
            "/v1/sessions",
            json!({"schema_id": "time_off", "reference_datetime": "2023-10-13T09:00:00-07:00"}),
        );
        assert_eq!(st, 201);
        v["session_id"].as_str().unwrap().to_string()
    }
}

#[test]
fn status_codes() {
    let (c, _) = Client::start(&ServiceConfig::default());
    let (st, v) = c.get("/v1/schemas");
    assert_eq!(st, 200);
    assert_eq!(v["schemas"].as_array().unwrap().len(), 2);

    let (st, v) = c.post("/v1/sessions", json!({"schema_id": "payroll"}));
    assert_eq!(st, 404);
    assert_eq!(v["schemas"], json!(["set_status", "time_off"]));
    assert_eq!(c.post_raw("/v1/sessions", "").0, 422);
    assert_eq!(c.post_raw("/v1/sessions", "{not json").0, 422);

    let id = c.create();
    assert_eq!(c.post(&format!("/v1/sessions/{id}/messages"), json!({"text": "  "})).0, 422);
    assert_eq!(c.post(&format!("/v1/sessions/{id}/messages"), json!({})).0, 422);
    assert_eq!(c.post("/v1/sessions/nope/messages", json!({"text": "hi"})).0, 404);
    assert_eq!(c.get("/v1/sessions/nope/state").0, 404);
    assert_eq!(c.post(&format!("/v1/sessions/{id}/confirm"), json!({"decision": "affirm"})).0, 409);
    assert_eq!(c.post(&format!("/v1/sessions/{id}/confirm"), json!({"decision": "maybe"})).0, 422);
}

#[test]
fn full_dialogue_with_structured_confirmation() {
    let (c, _) = Client::start(&ServiceConfig::default());
    let id = c.create();
    c.post(&format!("/v1/sessions/{id}/messages"), json!({"text": "I am taking next Thursday off as a vacation day."}));
    let (st, v) = c.post(&format!("/v1/sessions/{id}/messages"), json!({"text": "My name is Dana Smith"}));
    assert_eq!(st, 200);
    let resp: ActionResponse = serde_json::from_value(v).unwrap();
    let summary = resp.action.summary.unwrap();
    let line = summary.iter().find(|l| l.slot_id == "timeOffStartDate").unwrap();
    assert_eq!(line.render(), "timeOffStartDate: next Thursday → 2023-10-19");

    let (st, v) = c.post(&format!("/v1/sessions/{id}/confirm"), json!({"decision": "correct", "corrections": ["employeeName"]}));
    assert_eq!(st, 200);
    assert_eq!(v["action"]["kind"], "ask");
    assert_eq!(v["action"]["slot_id"], "employeeName");
    let (_, v) = c.post(&format!("/v1/sessions/{id}/messages"), json!({"text": "My name is Dana Lee"}));
    assert_eq!(v["action"]["kind"], "confirm_summary");
    let (st, v) = c.post(&format!("/v1/sessions/{id}/confirm"), json!({"decision": "affirm"}));
    assert_eq!(st, 200);
    assert_eq!(v["action"]["kind"], "dispatched");
    assert_eq!(v["action"]["receipt"]["handler_id"], "request_time_off");
    assert_eq!(c.post(&format!("/v1/sessions/{id}/messages"), json!({"text": "hello"})).0, 409);
}

#[test]
fn terminated_sessions_report_reason_and_help_link() {
    let (c, _) = Client::start(&ServiceConfig::default());
    let id = c.create();
    let (st, v) = c.post(&format!("/v1/sessions/{id}/messages"), json!({"text": "cancel"}));
    assert_eq!(st, 200);
    assert_eq!(v["terminated"], true);
    assert_eq!(v["reason"], "user_abort");
    let (st, v) = c.post(&format!("/v1/sessions/{id}/messages"), json!({"text": "hi"}));
    assert_eq!(st, 409);
    assert_eq!(v["reason"], "user_abort");
    assert!(v["wiki_url"].as_str().unwrap().starts_with("https://"));
}

#[test]
fn idle_sessions_expire() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ServiceConfig {
        idle_timeout_secs: 60,
        persistence_dir: Some(dir.path().to_path_buf()),
        ..ServiceConfig::default()
    };
    let (c, state) = Client::start(&cfg);
    let id = c.create();
    assert!(state.expire_idle(Utc::now()).is_empty());
    assert_eq!(state.expire_idle(Utc::now() + Duration::seconds(120)), vec![id.clone()]);
    assert_eq!(c.get(&format!("/v1/sessions/{id}/state")).0, 404);
    // An expired session is not brought back by a restart.
    let (c2, _) = Client::start(&cfg);
    assert_eq!(c2.get(&format!("/v1/sessions/{id}/state")).0, 404);
}
