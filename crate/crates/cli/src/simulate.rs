//! Seeded smart-bin traffic against a running service.
//!
//! The simulation sets up its own event (5 solo participants, `count` bins),
//! then performs `drops` claim-and-scan cycles. About one drop in ten carries
//! a tampered QR payload and must be refused. Request times are fixed offsets
//! from the event start, so two runs with the same arguments against fresh
//! services produce identical records.

use chrono::{DateTime, Duration, SecondsFormat, TimeZone, Utc};
use ecoq_core::domain::WasteType;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::client::{Client, ClientError};

pub const PARTICIPANTS: usize = 5;
pub const MAX_DROPS: usize = 10_000;
const TAMPER_PROBABILITY: f64 = 0.1;
const TELEMETRY_EVERY: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimParams {
    pub count: usize,
    pub drops: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DropOutcome {
    pub bin_id: String,
    pub grams: u64,
    pub tampered: bool,
    pub status: u16,
    pub lid_closed: bool,
}

impl DropOutcome {
    pub fn accepted(&self) -> bool {
        self.status == 201
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinTotals {
    pub bin_id: String,
    pub initial_grams: u64,
    pub final_grams: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimReport {
    pub event_id: String,
    pub drops: Vec<DropOutcome>,
    pub bins: Vec<BinTotals>,
    pub telemetry_readings: usize,
}

impl SimReport {
    pub fn accepted_grams(&self, bin_id: &str) -> u64 {
        self.drops
            .iter()
            .filter(|d| d.accepted() && d.bin_id == bin_id)
            .map(|d| d.grams)
            .sum()
    }

    /// Every bin's scale moved by exactly the accepted drop weight.
    pub fn conserved(&self) -> bool {
        self.bins
            .iter()
            .all(|b| b.final_grams - b.initial_grams == self.accepted_grams(&b.bin_id))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("unexpected response: {0}")]
    Protocol(String),
    #[error("--count must be at least 1 and --drops at most {MAX_DROPS}")]
    Params,
}

fn event_start() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2021, 5, 10, 10, 0, 0).unwrap()
}

fn stamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn field<'a>(value: &'a Value, pointer: &str) -> Result<&'a Value, SimError> {
    value
        .pointer(pointer)
        .ok_or_else(|| SimError::Protocol(format!("missing `{pointer}` in {value}")))
}

fn text(value: &Value, pointer: &str) -> Result<String, SimError> {
    field(value, pointer)?
        .as_str()
        .map(str::to_owned)
        .ok_or_else(|| SimError::Protocol(format!("`{pointer}` is not text")))
}

fn kg_to_grams(value: &Value) -> Result<u64, SimError> {
    value
        .as_f64()
        .map(|kg| (kg * 1000.0).round() as u64)
        .ok_or_else(|| SimError::Protocol(format!("`{value}` is not a weight")))
}

/// Changes one byte of the payload to a different printable character.
fn tamper(payload: &str, rng: &mut ChaCha8Rng) -> String {
    let mut bytes = payload.as_bytes().to_vec();
    let i = rng.gen_range(0..bytes.len());
    let mut b = bytes[i];
    while b == bytes[i] {
        b = rng.gen_range(b'a'..=b'z');
    }
    bytes[i] = b;
    String::from_utf8(bytes).expect("ASCII stays UTF-8")
}

pub fn simulate_bins(client: &Client, organizer: &str, params: SimParams) -> Result<SimReport, SimError> {
    if params.count == 0 || params.drops > MAX_DROPS {
        return Err(SimError::Params);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let start = event_start();
    let setup_time = stamp(start - Duration::days(1));
    let org = Some(organizer);
    let post = |path: &str, token: Option<&str>, time: &str, body: Value| {
        client.ok("POST", path, token, Some(time), Some(&body)).map(|r| r.json())
    };

    let event = post(
        "/events",
        org,
        &setup_time,
        json!({
            "name": format!("Bin simulation {}", params.seed),
            "icon": "recycle",
            "start_time": stamp(start),
            "end_time": stamp(start + Duration::hours(4)),
            "area_center": {"lat": 61.065, "lon": 28.095},
            "area_radius_m": 1500.0
        }),
    )?;
    let event_id = text(&event, "/event_id")?;
    post(&format!("/events/{event_id}/phase"), org, &setup_time, json!({"target": "preparation"}))?;

    let mut participants = Vec::new();
    for i in 0..PARTICIPANTS {
        let r = post(
            &format!("/events/{event_id}/participants"),
            org,
            &setup_time,
            json!({"display_name": format!("sim-walker-{i}"), "mode": "solo"}),
        )?;
        participants.push((text(&r, "/participant/participant_id")?, text(&r, "/token")?));
    }

    let mut bins = Vec::new();
    for i in 1..=params.count {
        let bin_id = format!("{event_id}-bin-{i}");
        let location = json!({
            "lat": 61.065 + rng.gen_range(-0.005..0.005),
            "lon": 28.095 + rng.gen_range(-0.005..0.005),
        });
        let r = post("/bins", org, &setup_time, json!({"bin_id": bin_id, "location": location}))?;
        let initial = kg_to_grams(field(&r, "/bin/cumulative_weight_kg")?)?;
        bins.push((bin_id, text(&r, "/token")?, initial));
    }
    post(&format!("/events/{event_id}/phase"), org, &stamp(start), json!({"target": "active"}))?;

    let mut drops = Vec::with_capacity(params.drops);
    let mut telemetry_readings = 0;
    for d in 0..params.drops {
        let now = stamp(start + Duration::seconds(60 + d as i64));
        let (participant_id, participant_token) = &participants[rng.gen_range(0..participants.len())];
        let waste = WasteType::ALL[rng.gen_range(0..WasteType::ALL.len())];
        let (bin_id, bin_token, _) = &bins[rng.gen_range(0..bins.len())];
        let grams: u64 = rng.gen_range(100..=8000);
        let tampered = rng.gen_bool(TAMPER_PROBABILITY);

        let claim = post(
            &format!("/events/{event_id}/claims"),
            Some(participant_token),
            &now,
            json!({"participant_id": participant_id, "waste_type": waste}),
        )?;
        let mut payload = text(&claim, "/qr_payload")?;
        if tampered {
            payload = tamper(&payload, &mut rng);
        }
        let body = serde_json::to_vec(&json!({"qr_payload": payload, "weight_kg": grams as f64 / 1000.0}))
            .expect("values always serialize");
        let reply = client.send("POST", &format!("/bins/{bin_id}/scan"), Some(bin_token), Some(&now), Some(&body))?;
        let bin_state = if reply.status == 201 {
            field(&reply.json(), "/bin")?.clone()
        } else {
            client.ok("GET", &format!("/bins/{bin_id}"), None, None, None)?.json()
        };
        drops.push(DropOutcome {
            bin_id: bin_id.clone(),
            grams,
            tampered,
            status: reply.status,
            lid_closed: bin_state.get("lid") == Some(&json!("closed")),
        });

        if (d + 1) % TELEMETRY_EVERY == 0 {
            // the bin reports what its sensors currently read
            let reading = format!(
                "{bin_id} {} {:.3} {now}",
                field(&bin_state, "/fill_percent")?,
                field(&bin_state, "/cumulative_weight_kg")?.as_f64().unwrap_or_default()
            );
            let r = client.send(
                "POST",
                &format!("/bins/{bin_id}/telemetry"),
                Some(bin_token),
                Some(&now),
                Some(reading.as_bytes()),
            )?;
            if r.status != 200 {
                return Err(SimError::Protocol(format!("telemetry refused: {}", r.text())));
            }
            telemetry_readings += 1;
        }
    }

    let mut totals = Vec::new();
    for (bin_id, _, initial) in &bins {
        let state = client.ok("GET", &format!("/bins/{bin_id}"), None, None, None)?.json();
        totals.push(BinTotals {
            bin_id: bin_id.clone(),
            initial_grams: *initial,
            final_grams: kg_to_grams(field(&state, "/cumulative_weight_kg")?)?,
        });
    }
    Ok(SimReport {
        event_id,
        drops,
        bins: totals,
        telemetry_readings,
    })
}
