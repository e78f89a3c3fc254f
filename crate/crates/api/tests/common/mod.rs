#![allow(dead_code)]

use chrono::{DateTime, Duration, TimeZone, Utc};
use ecoq_api::{route_request, ApiRequest, ApiResponse, Config, Service};
use serde_json::{json, Value};

pub fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2021, 5, 10, 10, 0, 0).unwrap()
}

pub fn at(minutes: i64) -> DateTime<Utc> {
    t0() + Duration::minutes(minutes)
}

pub struct Client<'a> {
    pub service: &'a Service,
    pub now: DateTime<Utc>,
}

impl<'a> Client<'a> {
    pub fn new(service: &'a Service) -> Self {
        Self { service, now: at(0) }
    }

    pub fn organizer(&self) -> String {
        self.service.tokens().organizer_token()
    }

    pub fn call(&self, method: &str, path: &str, token: Option<&str>, body: Option<Value>) -> ApiResponse {
        let mut req = ApiRequest::new(method, &format!("/api/v1{path}"), self.now);
        if let Some(t) = token {
            req = req.token(t);
        }
        if let Some(b) = body {
            req = req.json(&b);
        }
        route_request(self.service, &req)
    }

    pub fn get(&self, path: &str) -> ApiResponse {
        self.call("GET", path, None, None)
    }

    pub fn post(&self, path: &str, token: &str, body: Value) -> ApiResponse {
        self.call("POST", path, Some(token), Some(body))
    }

    /// Posts and insists on `status`, returning the JSON body.
    pub fn expect(&self, status: u16, path: &str, token: &str, body: Value) -> Value {
        let r = self.post(path, token, body);
        assert_eq!(r.status, status, "POST {path}: {}", String::from_utf8_lossy(&r.body));
        r.json_value()
    }
}

pub fn memory_service() -> Service {
    Service::open(Config::default()).unwrap()
}

pub fn event_body() -> Value {
    json!({
        "name": "Campus cleanup",
        "icon": "leaf",
        "start_time": "2021-05-10T10:00:00Z",
        "end_time": "2021-05-10T14:00:00Z",
        "area_center": {"lat": 61.065, "lon": 28.095},
        "area_radius_m": 2000.0
    })
}

pub struct Setup {
    pub event: String,
    pub participants: Vec<(String, String)>,
}

/// e1 in Active with `n` solo participants and one Plastic×2 quest.
pub fn active_event(c: &Client<'_>, n: usize) -> Setup {
    let org = c.organizer();
    let event = c.expect(201, "/events", &org, event_body());
    let id = event["event_id"].as_str().unwrap().to_owned();
    c.expect(200, &format!("/events/{id}/phase"), &org, json!({"target": "preparation"}));
    c.expect(
        201,
        &format!("/events/{id}/quests"),
        &org,
        json!({"title": "Plastic sweep", "target_type": "PLASTIC", "target_count": 2}),
    );
    let participants = (0..n)
        .map(|i| {
            let r = c.expect(
                201,
                &format!("/events/{id}/participants"),
                &org,
                json!({"display_name": format!("walker-{i}"), "mode": "solo"}),
            );
            (
                r["participant"]["participant_id"].as_str().unwrap().to_owned(),
                r["token"].as_str().unwrap().to_owned(),
            )
        })
        .collect();
    c.expect(200, &format!("/events/{id}/phase"), &org, json!({"target": "active"}));
    Setup { event: id, participants }
}
