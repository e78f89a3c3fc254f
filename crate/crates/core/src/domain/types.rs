use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::DomainError;
use crate::ids::{AreaId, BagId, EventId, ParticipantId, QuestId, TeamId};

pub type Timestamp = DateTime<Utc>;

pub const MAX_EVENT_NAME_CHARS: usize = 120;

/// Markers may sit up to this multiple of the event radius away from its center.
pub const AREA_TOLERANCE_FACTOR: f64 = 1.5;

pub const ICONS: &[&str] = &[
    "leaf", "tree", "recycle", "bottle", "beach", "park", "river", "city", "forest", "trash",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, DomainError> {
        let p = Self { lat, lon };
        p.validate()?;
        Ok(p)
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(DomainError::InvalidGeo)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WasteType {
    Mixed,
    Paper,
    Plastic,
    Glass,
    Metal,
    Hazardous,
}

impl WasteType {
    pub const ALL: [WasteType; 6] = [
        WasteType::Mixed,
        WasteType::Paper,
        WasteType::Plastic,
        WasteType::Glass,
        WasteType::Metal,
        WasteType::Hazardous,
    ];

    /// Uppercase wire name used in QR payloads and CSV exports.
    pub fn as_str(self) -> &'static str {
        match self {
            WasteType::Mixed => "MIXED",
            WasteType::Paper => "PAPER",
            WasteType::Plastic => "PLASTIC",
            WasteType::Glass => "GLASS",
            WasteType::Metal => "METAL",
            WasteType::Hazardous => "HAZARDOUS",
        }
    }
}

impl fmt::Display for WasteType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown waste type `{0}`")]
pub struct UnknownWasteType(pub String);

impl FromStr for WasteType {
    type Err = UnknownWasteType;

    /// Accepts exactly the uppercase wire names.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        WasteType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| UnknownWasteType(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Defined,
    Preparation,
    Active,
    Completed,
}

impl Phase {
    pub const ALL: [Phase; 4] = [
        Phase::Defined,
        Phase::Preparation,
        Phase::Active,
        Phase::Completed,
    ];

    pub fn successor(self) -> Option<Phase> {
        match self {
            Phase::Defined => Some(Phase::Preparation),
            Phase::Preparation => Some(Phase::Active),
            Phase::Active => Some(Phase::Completed),
            Phase::Completed => None,
        }
    }

    /// Phases in which the event can still be planned (areas, quests, teams, registrations).
    pub fn is_open(self) -> bool {
        matches!(self, Phase::Preparation | Phase::Active)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Phase::Defined => "defined",
            Phase::Preparation => "preparation",
            Phase::Active => "active",
            Phase::Completed => "completed",
        };
        f.write_str(s)
    }
}

/// A mass with gram resolution, exchanged on the wire as kilograms.
///
/// Integer grams make sums exact, which the bin scale and event totals rely on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Weight {
    grams: u64,
}

impl Weight {
    pub const ZERO: Weight = Weight { grams: 0 };

    pub fn from_grams(grams: u64) -> Self {
        Self { grams }
    }

    /// Rounds to the nearest gram. `None` for negative, NaN or infinite input.
    pub fn from_kg(kg: f64) -> Option<Self> {
        if !kg.is_finite() || kg < 0.0 {
            return None;
        }
        let grams = (kg * 1000.0).round();
        if grams > u64::MAX as f64 {
            return None;
        }
        Some(Self { grams: grams as u64 })
    }

    pub fn grams(self) -> u64 {
        self.grams
    }

    pub fn kg(self) -> f64 {
        self.grams as f64 / 1000.0
    }

    pub fn is_zero(self) -> bool {
        self.grams == 0
    }

    pub fn checked_add(self, other: Weight) -> Option<Weight> {
        self.grams.checked_add(other.grams).map(Weight::from_grams)
    }
}

impl std::ops::Add for Weight {
    type Output = Weight;

    fn add(self, rhs: Weight) -> Weight {
        Weight::from_grams(self.grams.saturating_add(rhs.grams))
    }
}

impl std::iter::Sum for Weight {
    fn sum<I: Iterator<Item = Weight>>(iter: I) -> Weight {
        iter.fold(Weight::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for Weight {
    /// Kilograms with exactly three decimals.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:03}", self.grams / 1000, self.grams % 1000)
    }
}

impl Serialize for Weight {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.kg())
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let kg = f64::deserialize(d)?;
        Weight::from_kg(kg).ok_or_else(|| serde::de::Error::custom("weight must be a non-negative number of kilograms"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PollutedArea {
    pub area_id: AreaId,
    pub center: GeoPoint,
    pub radius_m: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub event_id: EventId,
    pub name: String,
    pub icon: String,
    pub start_time: Timestamp,
    pub end_time: Timestamp,
    pub area_center: GeoPoint,
    pub area_radius_m: f64,
    pub phase: Phase,
    pub polluted_areas: Vec<PollutedArea>,
    pub collection_points: Vec<GeoPoint>,
}

/// Organizer input for a new event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    pub name: String,
    pub icon: String,
    pub start_time: Timestamp,
    pub end_time: Timestamp,
    pub area_center: GeoPoint,
    pub area_radius_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quest {
    pub quest_id: QuestId,
    pub event_id: EventId,
    pub title: String,
    pub target_type: Option<WasteType>,
    pub target_count: Option<u32>,
    pub area: Option<AreaId>,
    pub bonus_points: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParticipationMode {
    Solo,
    Team,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub participant_id: ParticipantId,
    pub display_name: String,
    pub mode: ParticipationMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Participation {
    pub participant_id: ParticipantId,
    pub quest_id: QuestId,
    pub started_at: Timestamp,
    pub completed_at: Option<Timestamp>,
    /// Bags of the quest's target type credited to this participation.
    #[serde(default)]
    pub matching_bags: u32,
    /// The bag whose registration completed the quest (and carries the bonus).
    #[serde(default)]
    pub completed_by: Option<BagId>,
}

impl Participation {
    pub fn is_active(&self) -> bool {
        self.completed_at.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Team {
    pub team_id: TeamId,
    pub event_id: EventId,
    pub name: String,
    pub member_ids: BTreeSet<ParticipantId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum TeamAction {
    Create { name: String },
    Join { team_id: TeamId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BagSource {
    App,
    Bin,
}

impl BagSource {
    pub fn as_str(self) -> &'static str {
        match self {
            BagSource::App => "app",
            BagSource::Bin => "bin",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BagRecord {
    pub bag_id: BagId,
    pub event_id: EventId,
    pub participant_id: ParticipantId,
    pub quest_id: Option<QuestId>,
    pub team_id: Option<TeamId>,
    pub waste_type: WasteType,
    pub weight_kg: Option<Weight>,
    pub points: u32,
    pub recorded_at: Timestamp,
    pub source: BagSource,
    /// Set when the classifier disagreed with low confidence; the claimed type was kept.
    #[serde(default)]
    pub flagged: bool,
}

/// A bag id reserved for a bin drop-off, printed into the participant's QR code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingClaim {
    pub bag_id: BagId,
    pub participant_id: ParticipantId,
    pub waste_type: WasteType,
    pub quest_id: Option<QuestId>,
    pub used: bool,
}
