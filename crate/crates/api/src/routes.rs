//! Transport-free request routing.
//!
//! All paths live under `/api/v1`. Requests are checked in a fixed order:
//! route, token secret, body, token role, then the domain operation.

use std::collections::HashMap;

use chrono::{DateTime, Utc};
use ecoq_core::domain::{
    BagSource, EventRecord, EventSpec, GeoPoint, ParticipationMode, Phase, TeamAction, Timestamp, WasteType, Weight,
};
use ecoq_core::geo::{find_events, nearest_collection_points, TimeWindow};
use ecoq_core::scoring::{leaderboard, Scope};
use ecoq_core::sgb::{fill_alerts, TelemetryReading};
use ecoq_core::storage::csv_export::export_event_csv;
use ecoq_core::verification::{encode_bag_qr, verify_waste_type, VerificationOutcome, DEFAULT_OVERRIDE_THRESHOLD};
use ecoq_core::{AreaId, BinId, Command, EventId, Fact, ParticipantId, QuestId};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::auth::{ApiToken, Role};
use crate::error::ApiError;
use crate::service::Service;

pub const PREFIX: &str = "/api/v1";

#[derive(Debug, Clone, PartialEq)]
pub struct ApiRequest {
    pub method: String,
    /// Full path including the `/api/v1` prefix; a `?query` suffix is allowed.
    pub path: String,
    pub query: String,
    pub body: Vec<u8>,
    pub token: Option<String>,
    /// The request's notion of "now"; handlers never read a clock.
    pub now: Timestamp,
}

impl ApiRequest {
    pub fn new(method: &str, path: &str, now: Timestamp) -> Self {
        let (path, query) = match path.split_once('?') {
            Some((p, q)) => (p.to_owned(), q.to_owned()),
            None => (path.to_owned(), String::new()),
        };
        Self {
            method: method.to_ascii_uppercase(),
            path,
            query,
            body: Vec::new(),
            token: None,
            now,
        }
    }

    pub fn token(mut self, token: impl Into<String>) -> Self {
        self.token = Some(token.into());
        self
    }

    pub fn json(mut self, body: &serde_json::Value) -> Self {
        self.body = serde_json::to_vec(body).expect("values always serialize");
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiResponse {
    pub status: u16,
    pub content_type: &'static str,
    pub body: Vec<u8>,
}

impl ApiResponse {
    fn json<T: Serialize>(status: u16, body: &T) -> Self {
        Self {
            status,
            content_type: "application/json",
            body: serde_json::to_vec(body).expect("response types always serialize"),
        }
    }

    fn error(e: &ApiError) -> Self {
        Self::json(e.status(), &e.body())
    }

    /// The body parsed as JSON, or `Null` when it is not JSON.
    pub fn json_value(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).unwrap_or(serde_json::Value::Null)
    }
}

type Handled = Result<ApiResponse, ApiError>;

struct Ctx<'a> {
    service: &'a Service,
    req: &'a ApiRequest,
    query: HashMap<String, String>,
}

impl Ctx<'_> {
    fn body<T: DeserializeOwned>(&self) -> Result<T, ApiError> {
        serde_json::from_slice(&self.req.body).map_err(|e| ApiError::BadRequest(format!("body: {e}")))
    }

    fn token(&self) -> Result<ApiToken, ApiError> {
        Ok(self.service.tokens().authenticate(self.req.token.as_deref())?)
    }

    fn organizer(&self) -> Result<(), ApiError> {
        self.token()?.permits(&Role::Organizer)?;
        Ok(())
    }

    fn query<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ApiError> {
        self.query
            .get(key)
            .map(|v| v.parse::<T>().map_err(|_| ApiError::BadRequest(format!("query parameter `{key}`: `{v}`"))))
            .transpose()
    }

    fn required<T: std::str::FromStr>(&self, key: &str) -> Result<T, ApiError> {
        self.query(key)?
            .ok_or_else(|| ApiError::BadRequest(format!("missing query parameter `{key}`")))
    }

    fn now(&self) -> Timestamp {
        self.req.now
    }
}

pub fn route_request(service: &Service, req: &ApiRequest) -> ApiResponse {
    let ctx = Ctx {
        service,
        req,
        query: form_urlencoded::parse(req.query.as_bytes()).into_owned().collect(),
    };
    match dispatch(&ctx) {
        Ok(r) => r,
        Err(e) => ApiResponse::error(&e),
    }
}

fn dispatch(ctx: &Ctx<'_>) -> Handled {
    let no_route = || ApiError::NoRoute {
        method: ctx.req.method.clone(),
        path: ctx.req.path.clone(),
    };
    let rest = ctx.req.path.strip_prefix(PREFIX).ok_or_else(no_route)?;
    let segments: Vec<&str> = rest.trim_end_matches('/').split('/').skip(1).collect();
    let ev = |id: &str| EventId::new(id);
    match (ctx.req.method.as_str(), segments.as_slice()) {
        ("POST", ["events"]) => create_event(ctx),
        ("GET", ["events"]) => search_events(ctx),
        ("GET", ["events", id]) => get_event(ctx, &ev(id)),
        ("POST", ["events", id, "phase"]) => advance(ctx, &ev(id)),
        ("POST", ["events", id, "areas"]) => add_area(ctx, &ev(id)),
        ("POST", ["events", id, "collection-points"]) => add_collection_point(ctx, &ev(id)),
        ("GET", ["events", id, "collection-points", "nearest"]) => nearest(ctx, &ev(id)),
        ("POST", ["events", id, "quests"]) => create_quest(ctx, &ev(id)),
        ("POST", ["events", id, "quests", qid, "start"]) => start_quest(ctx, &ev(id), QuestId::new(*qid)),
        ("POST", ["events", id, "participants"]) => register(ctx, &ev(id)),
        ("POST", ["events", id, "teams"]) => team(ctx, &ev(id)),
        ("POST", ["events", id, "bags"]) => record_bag(ctx, &ev(id)),
        ("POST", ["events", id, "claims"]) => issue_claim(ctx, &ev(id)),
        ("GET", ["events", id, "summary"]) => summary(ctx, &ev(id)),
        ("GET", ["events", id, "leaderboard"]) => board(ctx, &ev(id)),
        ("GET", ["events", id, "export.csv"]) => export(ctx, &ev(id)),
        ("POST", ["bins"]) => register_bin(ctx),
        ("GET", ["bins", "alerts"]) => alerts(ctx),
        ("GET", ["bins", id]) => Ok(ApiResponse::json(200, &ctx.service.bin(&BinId::new(*id))?)),
        ("POST", ["bins", id, "telemetry"]) => telemetry(ctx, BinId::new(*id)),
        ("POST", ["bins", id, "scan"]) => scan(ctx, BinId::new(*id)),
        _ => Err(no_route()),
    }
}

/// The participant a body claims to act for must be the token's holder.
fn check_participant(token: &ApiToken, event_id: &EventId, participant_id: &ParticipantId) -> Result<(), ApiError> {
    token.permits(&Role::Participant {
        event_id: event_id.clone(),
        participant_id: participant_id.clone(),
    })?;
    Ok(())
}

fn create_event(ctx: &Ctx<'_>) -> Handled {
    ctx.organizer()?;
    let spec: EventSpec = ctx.body()?;
    let agg = ctx.service.create_event(spec, ctx.now())?;
    Ok(ApiResponse::json(201, &agg.event))
}

#[derive(Serialize)]
struct EventHit<'a> {
    event: &'a EventRecord,
    distance_km: f64,
}

fn search_events(ctx: &Ctx<'_>) -> Handled {
    let center = GeoPoint {
        lat: ctx.required("lat")?,
        lon: ctx.required("lon")?,
    };
    let radius_km: f64 = ctx.required("radius_km")?;
    let from: Timestamp = ctx.query::<DateTime<Utc>>("from")?.unwrap_or(DateTime::<Utc>::MIN_UTC);
    let to: Timestamp = ctx.query::<DateTime<Utc>>("to")?.unwrap_or(DateTime::<Utc>::MAX_UTC);
    let window = TimeWindow::new(from, to)?;
    let events = ctx.service.event_records();
    let hits = find_events(&events, &center, radius_km, &window)?;
    let body: Vec<EventHit<'_>> = hits
        .iter()
        .map(|r| EventHit {
            event: r.item,
            distance_km: r.distance_km,
        })
        .collect();
    Ok(ApiResponse::json(200, &body))
}

fn get_event(ctx: &Ctx<'_>, id: &EventId) -> Handled {
    Ok(ApiResponse::json(200, &*ctx.service.snapshot(id)?))
}

fn run(ctx: &Ctx<'_>, id: &EventId, command: Command) -> Result<Vec<Fact>, ApiError> {
    Ok(ctx.service.execute(id, command, ctx.now())?.1)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PhaseBody {
    target: Phase,
}

fn advance(ctx: &Ctx<'_>, id: &EventId) -> Handled {
    ctx.organizer()?;
    let body: PhaseBody = ctx.body()?;
    let (agg, _) = ctx.service.execute(id, Command::AdvancePhase { target: body.target }, ctx.now())?;
    Ok(ApiResponse::json(200, &agg.event))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AreaBody {
    center: GeoPoint,
    radius_m: f64,
    #[serde(default)]
    note: String,
}

fn add_area(ctx: &Ctx<'_>, id: &EventId) -> Handled {
    ctx.organizer()?;
    let b: AreaBody = ctx.body()?;
    let facts = run(
        ctx,
        id,
        Command::AddPollutedArea {
            center: b.center,
            radius_m: b.radius_m,
            note: b.note,
        },
    )?;
    match facts.first() {
        Some(Fact::AreaAdded { area }) => Ok(ApiResponse::json(201, area)),
        _ => unreachable!("add_polluted_area yields AreaAdded"),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PointBody {
    point: GeoPoint,
}

fn add_collection_point(ctx: &Ctx<'_>, id: &EventId) -> Handled {
    ctx.organizer()?;
    let b: PointBody = ctx.body()?;
    run(ctx, id, Command::AddCollectionPoint { point: b.point })?;
    Ok(ApiResponse::json(201, &b.point))
}

#[derive(Serialize)]
struct PointHit {
    point: GeoPoint,
    distance_km: f64,
}

fn nearest(ctx: &Ctx<'_>, id: &EventId) -> Handled {
    let from = GeoPoint {
        lat: ctx.required("lat")?,
        lon: ctx.required("lon")?,
    };
    let k: usize = ctx.query("k")?.unwrap_or(3);
    let agg = ctx.service.snapshot(id)?;
    let hits = nearest_collection_points(&agg.event.collection_points, &from, k)?;
    let body: Vec<PointHit> = hits
        .into_iter()
        .map(|r| PointHit {
            point: r.item,
            distance_km: r.distance_km,
        })
        .collect();
    Ok(ApiResponse::json(200, &body))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuestBody {
    title: String,
    #[serde(default)]
    target_type: Option<WasteType>,
    #[serde(default)]
    target_count: Option<u32>,
    #[serde(default)]
    area: Option<AreaId>,
    #[serde(default)]
    bonus_points: Option<u32>,
}

fn create_quest(ctx: &Ctx<'_>, id: &EventId) -> Handled {
    ctx.organizer()?;
    let b: QuestBody = ctx.body()?;
    let facts = run(
        ctx,
        id,
        Command::CreateQuest {
            title: b.title,
            target_type: b.target_type,
            target_count: b.target_count,
            area: b.area,
            bonus_points: b.bonus_points,
        },
    )?;
    match facts.first() {
        Some(Fact::QuestCreated { quest }) => Ok(ApiResponse::json(201, quest)),
        _ => unreachable!("create_quest yields QuestCreated"),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ParticipantRef {
    participant_id: ParticipantId,
}

fn start_quest(ctx: &Ctx<'_>, id: &EventId, quest_id: QuestId) -> Handled {
    let token = ctx.token()?;
    let b: ParticipantRef = ctx.body()?;
    check_participant(&token, id, &b.participant_id)?;
    let facts = run(
        ctx,
        id,
        Command::StartQuest {
            participant_id: b.participant_id,
            quest_id,
            now: ctx.now(),
        },
    )?;
    match facts.first() {
        Some(Fact::QuestStarted { participation }) => Ok(ApiResponse::json(201, participation)),
        _ => unreachable!("start_quest yields QuestStarted"),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegisterBody {
    display_name: String,
    mode: ParticipationMode,
}

#[derive(Serialize)]
struct Registered<'a> {
    participant: &'a ecoq_core::domain::Participant,
    token: String,
}

fn register(ctx: &Ctx<'_>, id: &EventId) -> Handled {
    ctx.organizer()?;
    let b: RegisterBody = ctx.body()?;
    let facts = run(
        ctx,
        id,
        Command::RegisterParticipant {
            display_name: b.display_name,
            mode: b.mode,
        },
    )?;
    match facts.first() {
        Some(Fact::ParticipantRegistered { participant }) => Ok(ApiResponse::json(
            201,
            &Registered {
                participant,
                token: ctx.service.tokens().participant_token(id, &participant.participant_id),
            },
        )),
        _ => unreachable!("register_participant yields ParticipantRegistered"),
    }
}

#[derive(Deserialize)]
struct TeamBody {
    participant_id: ParticipantId,
    #[serde(flatten)]
    action: TeamAction,
}

fn team(ctx: &Ctx<'_>, id: &EventId) -> Handled {
    let token = ctx.token()?;
    let b: TeamBody = ctx.body()?;
    check_participant(&token, id, &b.participant_id)?;
    let status = match b.action {
        TeamAction::Create { .. } => 201,
        TeamAction::Join { .. } => 200,
    };
    let facts = run(
        ctx,
        id,
        Command::Team {
            participant_id: b.participant_id,
            action: b.action,
        },
    )?;
    match facts.first() {
        Some(Fact::TeamChanged { team }) => Ok(ApiResponse::json(status, team)),
        _ => unreachable!("team_action yields TeamChanged"),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BagBody {
    participant_id: ParticipantId,
    waste_type: WasteType,
    #[serde(default)]
    source: Option<BagSource>,
    #[serde(default)]
    quest_id: Option<QuestId>,
    #[serde(default)]
    weight_kg: Option<Weight>,
    /// Photo reference for the waste classifier.
    #[serde(default)]
    image_ref: Option<String>,
}

#[derive(Serialize)]
struct BagRecorded<'a> {
    bag: &'a ecoq_core::domain::BagRecord,
    verification: Option<VerificationOutcome>,
    completed: Option<&'a ecoq_core::domain::Participation>,
}

fn recorded(facts: &[Fact]) -> (&ecoq_core::domain::BagRecord, Option<&ecoq_core::domain::Participation>) {
    let bag = facts
        .iter()
        .find_map(|f| match f {
            Fact::BagRecorded { bag } => Some(bag),
            _ => None,
        })
        .expect("record_bag yields BagRecorded");
    let completed = facts.iter().find_map(|f| match f {
        Fact::QuestCompleted { participation } => Some(participation),
        _ => None,
    });
    (bag, completed)
}

fn record_bag(ctx: &Ctx<'_>, id: &EventId) -> Handled {
    let token = ctx.token()?;
    let b: BagBody = ctx.body()?;
    check_participant(&token, id, &b.participant_id)?;
    let mut waste_type = b.waste_type;
    let mut flagged = false;
    let verification = b.image_ref.as_deref().map(|image| {
        let verdict = ctx.service.classifier().classify(image);
        verify_waste_type(b.waste_type, &verdict, DEFAULT_OVERRIDE_THRESHOLD)
    });
    match verification {
        Some(VerificationOutcome::Override(t)) => waste_type = t,
        Some(VerificationOutcome::Flag) => flagged = true,
        Some(VerificationOutcome::Accept) | None => {}
    }
    let facts = run(
        ctx,
        id,
        Command::RecordBag {
            participant_id: b.participant_id,
            waste_type,
            source: b.source.unwrap_or(BagSource::App),
            quest_id: b.quest_id,
            weight_kg: b.weight_kg,
            flagged,
            now: ctx.now(),
        },
    )?;
    let (bag, completed) = recorded(&facts);
    Ok(ApiResponse::json(
        201,
        &BagRecorded {
            bag,
            verification,
            completed,
        },
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClaimBody {
    participant_id: ParticipantId,
    waste_type: WasteType,
    #[serde(default)]
    quest_id: Option<QuestId>,
}

#[derive(Serialize)]
struct ClaimIssued<'a> {
    claim: &'a ecoq_core::domain::PendingClaim,
    qr_payload: String,
}

fn issue_claim(ctx: &Ctx<'_>, id: &EventId) -> Handled {
    let token = ctx.token()?;
    let b: ClaimBody = ctx.body()?;
    check_participant(&token, id, &b.participant_id)?;
    let facts = run(
        ctx,
        id,
        Command::IssueClaim {
            participant_id: b.participant_id,
            waste_type: b.waste_type,
            quest_id: b.quest_id,
        },
    )?;
    let Some(Fact::ClaimIssued { claim }) = facts.first() else {
        unreachable!("issue_claim yields ClaimIssued")
    };
    let qr_payload = encode_bag_qr(id, &claim.bag_id, claim.waste_type)
        .map_err(|e| ApiError::BadRequest(e.to_string()))?;
    Ok(ApiResponse::json(201, &ClaimIssued { claim, qr_payload }))
}

fn summary(ctx: &Ctx<'_>, id: &EventId) -> Handled {
    Ok(ApiResponse::json(200, &ctx.service.snapshot(id)?.summary()))
}

fn board(ctx: &Ctx<'_>, id: &EventId) -> Handled {
    let scope = match ctx.query.get("scope").map(String::as_str) {
        None | Some("individual") => Scope::Individual,
        Some("team") => Scope::Team,
        Some(other) => return Err(ApiError::BadRequest(format!("unknown scope `{other}`"))),
    };
    let agg = ctx.service.snapshot(id)?;
    Ok(ApiResponse::json(200, &leaderboard(&agg.bags, scope)))
}

fn export(ctx: &Ctx<'_>, id: &EventId) -> Handled {
    let agg = ctx.service.snapshot(id)?;
    Ok(ApiResponse {
        status: 200,
        content_type: "text/csv; charset=utf-8",
        body: export_event_csv(&agg.event, &agg.bags, &agg.participations),
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BinBody {
    bin_id: BinId,
    location: GeoPoint,
}

#[derive(Serialize)]
struct BinRegistered {
    bin: ecoq_core::sgb::BinState,
    token: String,
}

fn register_bin(ctx: &Ctx<'_>) -> Handled {
    ctx.organizer()?;
    let b: BinBody = ctx.body()?;
    let bin = ctx.service.register_bin(b.bin_id, b.location, ctx.now())?;
    let token = ctx.service.tokens().bin_token(&bin.bin_id);
    Ok(ApiResponse::json(201, &BinRegistered { bin, token }))
}

fn alerts(ctx: &Ctx<'_>) -> Handled {
    let threshold: f64 = ctx.query("threshold")?.unwrap_or(ctx.service.config().fill_alert_threshold);
    let bins = ctx.service.bin_states();
    let ids = fill_alerts(&bins, threshold);
    let body: Vec<_> = ids
        .iter()
        .filter_map(|id| bins.iter().find(|b| &b.bin_id == id))
        .collect();
    Ok(ApiResponse::json(200, &body))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TelemetryBody {
    fill_percent: f64,
    weight_kg: Weight,
    #[serde(default)]
    timestamp: Option<Timestamp>,
}

#[derive(Serialize)]
struct TelemetryAccepted {
    bin: ecoq_core::sgb::BinState,
    alert: bool,
}

/// Accepts either a JSON body or the bin's native line
/// `<bin_id> <fill_percent> <weight_kg> <timestamp>`.
fn telemetry(ctx: &Ctx<'_>, bin_id: BinId) -> Handled {
    let token = ctx.token()?;
    let trimmed = ctx.req.body.trim_ascii_start();
    let reading = if trimmed.first() == Some(&b'{') {
        let b: TelemetryBody = ctx.body()?;
        TelemetryReading {
            bin_id: bin_id.clone(),
            fill_percent: b.fill_percent,
            weight_kg: b.weight_kg,
            timestamp: b.timestamp.unwrap_or(ctx.now()),
        }
    } else {
        let line = std::str::from_utf8(trimmed).map_err(|_| ApiError::BadRequest("body is not UTF-8".into()))?;
        let reading: TelemetryReading = line
            .trim()
            .parse()
            .map_err(|e| ApiError::BadRequest(format!("telemetry line: {e}")))?;
        if reading.bin_id != bin_id {
            return Err(ApiError::BadRequest("telemetry line names another bin".into()));
        }
        reading
    };
    token.permits(&Role::Bin { bin_id: bin_id.clone() })?;
    let bin = ctx.service.telemetry(reading, ctx.now())?;
    let alert = bin.fill_percent >= ctx.service.config().fill_alert_threshold;
    Ok(ApiResponse::json(200, &TelemetryAccepted { bin, alert }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanBody {
    qr_payload: String,
    weight_kg: f64,
}

#[derive(Serialize)]
struct ScanAccepted {
    bag: ecoq_core::domain::BagRecord,
    bin: ecoq_core::sgb::BinState,
}

fn scan(ctx: &Ctx<'_>, bin_id: BinId) -> Handled {
    let token = ctx.token()?;
    let b: ScanBody = ctx.body()?;
    token.permits(&Role::Bin { bin_id: bin_id.clone() })?;
    let (bin, bag) = ctx.service.scan(&bin_id, &b.qr_payload, b.weight_kg, ctx.now())?;
    Ok(ApiResponse::json(201, &ScanAccepted { bag, bin }))
}
