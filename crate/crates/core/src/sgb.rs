//! Simulated smart garbage bin: GPS position, ultrasonic fill sensor, scale,
//! QR scanner and lid actuator.
//!
//! Bins live independently of events. A drop-off is attributed to whatever
//! event the scanned QR claim names. Time is always passed in.

use std::fmt;
use std::str::FromStr;

use chrono::DateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{BagRecord, Command, DomainError, EventAggregate, Fact, GeoPoint, Phase, Timestamp, Weight};
use crate::ids::BinId;
use crate::verification::{decode_bag_qr, BagClaim, QrError};

/// Fill percentage points added per kilogram dropped.
pub const FILL_PERCENT_PER_KG: f64 = 2.0;
pub const DEFAULT_FILL_ALERT_THRESHOLD: f64 = 80.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lid {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinState {
    pub bin_id: BinId,
    pub location: GeoPoint,
    pub fill_percent: f64,
    pub cumulative_weight_kg: Weight,
    pub lid: Lid,
    pub last_seen: Timestamp,
    /// Completed open/close cycles of the lid.
    #[serde(default)]
    pub lid_cycles: u64,
}

impl BinState {
    pub fn new(bin_id: BinId, location: GeoPoint, now: Timestamp) -> Self {
        Self {
            bin_id,
            location,
            fill_percent: 0.0,
            cumulative_weight_kg: Weight::ZERO,
            lid: Lid::Closed,
            last_seen: now,
            lid_cycles: 0,
        }
    }

    /// Scale and fill effect of an accepted drop, including the lid cycle.
    fn after_drop(&self, weight: Weight, now: Timestamp) -> BinState {
        let mut next = self.clone();
        next.lid = Lid::Open;
        next.cumulative_weight_kg = self.cumulative_weight_kg + weight;
        next.fill_percent = (self.fill_percent + weight.kg() * FILL_PERCENT_PER_KG).min(100.0);
        next.last_seen = self.last_seen.max(now);
        next.lid = Lid::Closed;
        next.lid_cycles += 1;
        next
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryReading {
    pub bin_id: BinId,
    pub fill_percent: f64,
    /// Scale total.
    pub weight_kg: Weight,
    pub timestamp: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TelemetryParseError {
    #[error("expected `bin_id fill_percent weight_kg timestamp`")]
    FieldCount,
    #[error("invalid {0}")]
    Field(&'static str),
}

impl FromStr for TelemetryReading {
    type Err = TelemetryParseError;

    /// One line, four fields separated by single spaces.
    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let line = line.strip_suffix('\n').unwrap_or(line);
        let line = line.strip_suffix('\r').unwrap_or(line);
        let fields: Vec<&str> = line.split(' ').collect();
        let [bin_id, fill, weight, ts] = fields[..] else {
            return Err(TelemetryParseError::FieldCount);
        };
        if bin_id.is_empty() {
            return Err(TelemetryParseError::Field("bin_id"));
        }
        let fill_percent: f64 = fill.parse().map_err(|_| TelemetryParseError::Field("fill_percent"))?;
        let weight_kg = weight
            .parse::<f64>()
            .ok()
            .and_then(Weight::from_kg)
            .ok_or(TelemetryParseError::Field("weight_kg"))?;
        let timestamp = DateTime::parse_from_rfc3339(ts)
            .map_err(|_| TelemetryParseError::Field("timestamp"))?
            .to_utc();
        Ok(Self {
            bin_id: BinId::new(bin_id),
            fill_percent,
            weight_kg,
            timestamp,
        })
    }
}

impl fmt::Display for TelemetryReading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {}",
            self.bin_id,
            self.fill_percent,
            self.weight_kg,
            self.timestamp.to_rfc3339_opts(chrono::SecondsFormat::AutoSi, true)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BinError {
    #[error("reading is older than the bin's last report")]
    StaleReading,
    #[error("unknown bin `{0}`")]
    UnknownBin(String),
    #[error("reading out of range: {0}")]
    RangeViolation(&'static str),
    #[error("bad claim: {0}")]
    BadClaim(#[from] QrError),
    #[error("event `{0}` is not active")]
    EventNotActive(String),
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("measured weight must be positive")]
    NonPositiveWeight,
    #[error(transparent)]
    Rejected(#[from] DomainError),
}

pub fn ingest_telemetry(state: &BinState, reading: &TelemetryReading) -> Result<BinState, BinError> {
    if reading.bin_id != state.bin_id {
        return Err(BinError::UnknownBin(reading.bin_id.to_string()));
    }
    if reading.timestamp < state.last_seen {
        return Err(BinError::StaleReading);
    }
    if !(reading.fill_percent.is_finite() && (0.0..=100.0).contains(&reading.fill_percent)) {
        return Err(BinError::RangeViolation("fill_percent must be within [0, 100]"));
    }
    if reading.weight_kg < state.cumulative_weight_kg {
        return Err(BinError::RangeViolation("scale total cannot decrease"));
    }
    Ok(BinState {
        fill_percent: reading.fill_percent,
        cumulative_weight_kg: reading.weight_kg,
        last_seen: reading.timestamp,
        ..state.clone()
    })
}

/// Receives verified claims from a bin and turns them into bag records.
pub trait DropSink {
    fn accept_drop(&mut self, claim: &BagClaim, weight: Weight, now: Timestamp) -> Result<BagRecord, BinError>;
}

impl DropSink for EventAggregate {
    fn accept_drop(&mut self, claim: &BagClaim, weight: Weight, now: Timestamp) -> Result<BagRecord, BinError> {
        if claim.event_id != self.event.event_id {
            return Err(BinError::UnknownEvent(claim.event_id.to_string()));
        }
        if self.event.phase != Phase::Active {
            return Err(BinError::EventNotActive(claim.event_id.to_string()));
        }
        let facts = self.execute(&drop_command(claim, weight, now))?;
        Ok(bag_from_facts(facts))
    }
}

/// The domain command a verified drop turns into.
pub fn drop_command(claim: &BagClaim, weight: Weight, now: Timestamp) -> Command {
    Command::RecordDrop {
        bag_id: claim.bag_id.clone(),
        waste_type: claim.waste_type,
        weight_kg: weight,
        now,
    }
}

pub fn bag_from_facts(facts: Vec<Fact>) -> BagRecord {
    facts
        .into_iter()
        .find_map(|f| match f {
            Fact::BagRecorded { bag } => Some(bag),
            _ => None,
        })
        .expect("a recorded drop always yields a bag")
}

/// Scan a QR payload, weigh the drop and hand it to `sink`.
///
/// On success the scale and fill level reflect the drop; on any error the
/// bin is unchanged. The lid is closed afterwards either way.
pub fn bin_scan_drop(
    state: &BinState,
    qr_payload: &str,
    measured_weight_kg: f64,
    now: Timestamp,
    sink: &mut impl DropSink,
) -> Result<(BinState, BagRecord), BinError> {
    let claim = decode_bag_qr(qr_payload)?;
    let weight = Weight::from_kg(measured_weight_kg)
        .filter(|w| !w.is_zero())
        .ok_or(BinError::NonPositiveWeight)?;
    let bag = sink.accept_drop(&claim, weight, now)?;
    Ok((state.after_drop(weight, now), bag))
}

/// Bin ids whose fill level is at least `threshold_percent`, fullest first.
pub fn fill_alerts(bins: &[BinState], threshold_percent: f64) -> Vec<BinId> {
    let mut hits: Vec<&BinState> = bins.iter().filter(|b| b.fill_percent >= threshold_percent).collect();
    hits.sort_by(|a, b| {
        b.fill_percent
            .total_cmp(&a.fill_percent)
            .then_with(|| a.bin_id.cmp(&b.bin_id))
    });
    hits.into_iter().map(|b| b.bin_id.clone()).collect()
}

/// Persistent history of one bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum BinCommand {
    Register { bin_id: BinId, location: GeoPoint, now: Timestamp },
    Telemetry { reading: TelemetryReading },
    /// An accepted drop; the bag itself lives in the event's log.
    Drop { weight_kg: Weight, now: Timestamp },
}

impl BinCommand {
    pub fn name(&self) -> &'static str {
        match self {
            BinCommand::Register { .. } => "register",
            BinCommand::Telemetry { .. } => "telemetry",
            BinCommand::Drop { .. } => "drop",
        }
    }
}

/// Folds a bin's history. `None` when the first command is not a registration.
pub fn replay_bin<'a>(commands: impl IntoIterator<Item = &'a BinCommand>) -> Result<Option<BinState>, BinError> {
    let mut state: Option<BinState> = None;
    for cmd in commands {
        state = Some(match (state, cmd) {
            (None, BinCommand::Register { bin_id, location, now }) => BinState::new(bin_id.clone(), *location, *now),
            (None, _) | (Some(_), BinCommand::Register { .. }) => return Ok(None),
            (Some(s), BinCommand::Telemetry { reading }) => ingest_telemetry(&s, reading)?,
            (Some(s), BinCommand::Drop { weight_kg, now }) => s.after_drop(*weight_kg, *now),
        });
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use chrono::Utc;

    fn t(min: u32) -> Timestamp {
        Utc.with_ymd_and_hms(2021, 5, 10, 10, min, 0).unwrap()
    }

    fn bin() -> BinState {
        BinState::new(BinId::new("bin-1"), GeoPoint { lat: 61.06, lon: 28.09 }, t(0))
    }

    fn reading(fill: f64, kg: f64, at: Timestamp) -> TelemetryReading {
        TelemetryReading {
            bin_id: BinId::new("bin-1"),
            fill_percent: fill,
            weight_kg: Weight::from_kg(kg).unwrap(),
            timestamp: at,
        }
    }

    #[test]
    fn telemetry_updates_state() {
        let s = ingest_telemetry(&bin(), &reading(40.0, 1.0, t(1))).unwrap();
        let s = ingest_telemetry(&s, &reading(55.0, 2.0, t(2))).unwrap();
        assert_eq!(s.fill_percent, 55.0);
        assert_eq!(s.cumulative_weight_kg, Weight::from_grams(2000));
        assert_eq!(s.last_seen, t(2));
    }

    #[test]
    fn telemetry_gates() {
        let s = ingest_telemetry(&bin(), &reading(40.0, 1.0, t(5))).unwrap();
        assert_eq!(ingest_telemetry(&s, &reading(41.0, 1.0, t(4))), Err(BinError::StaleReading));
        assert!(matches!(ingest_telemetry(&s, &reading(140.0, 1.0, t(6))), Err(BinError::RangeViolation(_))));
        assert!(matches!(ingest_telemetry(&s, &reading(-1.0, 1.0, t(6))), Err(BinError::RangeViolation(_))));
        assert!(matches!(ingest_telemetry(&s, &reading(40.0, 0.5, t(6))), Err(BinError::RangeViolation(_))));
        let mut other = reading(40.0, 1.0, t(6));
        other.bin_id = BinId::new("bin-2");
        assert_eq!(ingest_telemetry(&s, &other), Err(BinError::UnknownBin("bin-2".into())));
    }

    #[test]
    fn telemetry_idempotent_at_equal_timestamp() {
        let r = reading(40.0, 1.0, t(5));
        let once = ingest_telemetry(&bin(), &r).unwrap();
        let twice = ingest_telemetry(&once, &r).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn wire_format() {
        let r: TelemetryReading = "bin-1 55.5 12.250 2021-05-10T10:05:00Z".parse().unwrap();
        assert_eq!(r, reading(55.5, 12.25, t(5)));
        assert_eq!(r.to_string(), "bin-1 55.5 12.250 2021-05-10T10:05:00Z");
        assert_eq!(r.to_string().parse::<TelemetryReading>().unwrap(), r);
        assert_eq!("bin-1 55.5 12.250".parse::<TelemetryReading>(), Err(TelemetryParseError::FieldCount));
        assert_eq!(
            "bin-1  55.5 12.250 2021-05-10T10:05:00Z".parse::<TelemetryReading>(),
            Err(TelemetryParseError::FieldCount)
        );
        assert_eq!(
            "bin-1 x 12.250 2021-05-10T10:05:00Z".parse::<TelemetryReading>(),
            Err(TelemetryParseError::Field("fill_percent"))
        );
        assert_eq!(
            "bin-1 5 12.250 yesterday".parse::<TelemetryReading>(),
            Err(TelemetryParseError::Field("timestamp"))
        );
    }

    #[test]
    fn alerts_sorted_fullest_first() {
        let mk = |id: &str, fill| BinState {
            fill_percent: fill,
            ..BinState::new(BinId::new(id), GeoPoint { lat: 0.0, lon: 0.0 }, t(0))
        };
        let bins = [mk("a", 30.0), mk("b", 85.0), mk("c", 92.0)];
        assert_eq!(fill_alerts(&bins, 80.0), vec![BinId::new("c"), BinId::new("b")]);
        assert_eq!(fill_alerts(&bins, 0.0).len(), 3);
        assert!(fill_alerts(&bins, 100.0).is_empty());
    }

    #[test]
    fn drop_fill_is_capped() {
        let s = bin().after_drop(Weight::from_kg(60.0).unwrap(), t(1));
        assert_eq!(s.fill_percent, 100.0);
        assert_eq!(s.lid, Lid::Closed);
        assert_eq!(s.lid_cycles, 1);
    }
}
