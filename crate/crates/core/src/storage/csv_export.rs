//! Two-section CSV export of an event.
//!
//! Section one lists bags in `recorded_at` order; after one blank line, section
//! two lists quest participations. RFC 4180 quoting, UTF-8, LF line endings,
//! empty fields for absent values, weights with three decimals and timestamps
//! as ISO-8601 UTC with a `Z` suffix.

use chrono::{DateTime, SecondsFormat, Utc};
use thiserror::Error;

use crate::domain::{BagRecord, BagSource, EventRecord, Participation, Timestamp, WasteType, Weight};

pub const BAG_HEADER: [&str; 10] = [
    "event_id",
    "participant_id",
    "team_id",
    "quest_id",
    "bag_id",
    "waste_type",
    "weight_kg",
    "points",
    "recorded_at",
    "source",
];

pub const PARTICIPATION_HEADER: [&str; 4] = ["quest_id", "participant_id", "started_at", "completed_at"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BagRow {
    pub event_id: String,
    pub participant_id: String,
    pub team_id: Option<String>,
    pub quest_id: Option<String>,
    pub bag_id: String,
    pub waste_type: WasteType,
    pub weight: Option<Weight>,
    pub points: u32,
    pub recorded_at: Timestamp,
    pub source: BagSource,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParticipationRow {
    pub quest_id: String,
    pub participant_id: String,
    pub started_at: Timestamp,
    pub completed_at: Option<Timestamp>,
}

/// The parsed content of an export file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventCsv {
    pub bags: Vec<BagRow>,
    pub participations: Vec<ParticipationRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CsvError {
    #[error("csv syntax: {0}")]
    Syntax(String),
    #[error("missing or unexpected header")]
    Header,
    #[error("row {row}: invalid {field}")]
    Field { row: usize, field: &'static str },
}

fn timestamp(t: &Timestamp) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

fn parse_timestamp(s: &str) -> Option<Timestamp> {
    if !s.ends_with('Z') {
        return None;
    }
    DateTime::parse_from_rfc3339(s).ok().map(|t| t.with_timezone(&Utc))
}

fn optional(s: &str) -> Option<String> {
    (!s.is_empty()).then(|| s.to_owned())
}

impl EventCsv {
    pub fn from_records(event: &EventRecord, bags: &[BagRecord], participations: &[Participation]) -> Self {
        let mut ordered: Vec<&BagRecord> = bags.iter().collect();
        ordered.sort_by_key(|b| b.recorded_at);
        let mut parts: Vec<&Participation> = participations.iter().collect();
        parts.sort_by_key(|p| p.started_at);
        Self {
            bags: ordered
                .into_iter()
                .map(|b| BagRow {
                    event_id: event.event_id.to_string(),
                    participant_id: b.participant_id.to_string(),
                    team_id: b.team_id.as_ref().map(ToString::to_string),
                    quest_id: b.quest_id.as_ref().map(ToString::to_string),
                    bag_id: b.bag_id.to_string(),
                    waste_type: b.waste_type,
                    weight: b.weight_kg,
                    points: b.points,
                    recorded_at: b.recorded_at,
                    source: b.source,
                })
                .collect(),
            participations: parts
                .into_iter()
                .map(|p| ParticipationRow {
                    quest_id: p.quest_id.to_string(),
                    participant_id: p.participant_id.to_string(),
                    started_at: p.started_at,
                    completed_at: p.completed_at,
                })
                .collect(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = section(&BAG_HEADER, self.bags.iter().map(|b| {
            vec![
                b.event_id.clone(),
                b.participant_id.clone(),
                b.team_id.clone().unwrap_or_default(),
                b.quest_id.clone().unwrap_or_default(),
                b.bag_id.clone(),
                b.waste_type.as_str().to_owned(),
                b.weight.map(|w| w.to_string()).unwrap_or_default(),
                b.points.to_string(),
                timestamp(&b.recorded_at),
                b.source.as_str().to_owned(),
            ]
        }));
        out.push(b'\n');
        out.extend(section(&PARTICIPATION_HEADER, self.participations.iter().map(|p| {
            vec![
                p.quest_id.clone(),
                p.participant_id.clone(),
                timestamp(&p.started_at),
                p.completed_at.as_ref().map(timestamp).unwrap_or_default(),
            ]
        })));
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, CsvError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(bytes);
        let mut records = reader.records();
        let mut next = || records.next().transpose().map_err(|e| CsvError::Syntax(e.to_string()));

        let header = next()?.ok_or(CsvError::Header)?;
        if header.iter().ne(BAG_HEADER) {
            return Err(CsvError::Header);
        }
        let mut out = EventCsv::default();
        let mut in_participations = false;
        let mut row = 1;
        while let Some(rec) = next()? {
            row += 1;
            if !in_participations && rec.iter().eq(PARTICIPATION_HEADER) {
                in_participations = true;
                continue;
            }
            let f: Vec<&str> = rec.iter().collect();
            if in_participations {
                out.participations.push(parse_participation(row, &f)?);
            } else {
                out.bags.push(parse_bag(row, &f)?);
            }
        }
        if !in_participations {
            return Err(CsvError::Header);
        }
        Ok(out)
    }
}

fn parse_bag(row: usize, f: &[&str]) -> Result<BagRow, CsvError> {
    let bad = |field| CsvError::Field { row, field };
    let [event_id, participant_id, team_id, quest_id, bag_id, waste, weight, points, recorded_at, source] = f[..] else {
        return Err(bad("field count"));
    };
    let weight = match weight {
        "" => None,
        w => Some(parse_weight(w).ok_or(bad("weight_kg"))?),
    };
    Ok(BagRow {
        event_id: event_id.to_owned(),
        participant_id: participant_id.to_owned(),
        team_id: optional(team_id),
        quest_id: optional(quest_id),
        bag_id: bag_id.to_owned(),
        waste_type: waste.parse().map_err(|_| bad("waste_type"))?,
        weight,
        points: points.parse().map_err(|_| bad("points"))?,
        recorded_at: parse_timestamp(recorded_at).ok_or(bad("recorded_at"))?,
        source: match source {
            "app" => BagSource::App,
            "bin" => BagSource::Bin,
            _ => return Err(bad("source")),
        },
    })
}

/// Exactly `<digits>.<3 digits>`.
fn parse_weight(s: &str) -> Option<Weight> {
    let (whole, frac) = s.split_once('.')?;
    if whole.is_empty() || frac.len() != 3 || !whole.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let grams = whole.parse::<u64>().ok()?.checked_mul(1000)?.checked_add(frac.parse().ok()?)?;
    Some(Weight::from_grams(grams))
}

fn parse_participation(row: usize, f: &[&str]) -> Result<ParticipationRow, CsvError> {
    let bad = |field| CsvError::Field { row, field };
    let [quest_id, participant_id, started_at, completed_at] = f[..] else {
        return Err(bad("field count"));
    };
    Ok(ParticipationRow {
        quest_id: quest_id.to_owned(),
        participant_id: participant_id.to_owned(),
        started_at: parse_timestamp(started_at).ok_or(bad("started_at"))?,
        completed_at: match completed_at {
            "" => None,
            t => Some(parse_timestamp(t).ok_or(bad("completed_at"))?),
        },
    })
}

fn section<I>(header: &[&str], rows: I) -> Vec<u8>
where
    I: Iterator<Item = Vec<String>>,
{
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    // writes into a Vec cannot fail
    writer.write_record(header).expect("in-memory write");
    for row in rows {
        writer.write_record(&row).expect("in-memory write");
    }
    writer.into_inner().expect("in-memory flush")
}

pub fn export_event_csv(event: &EventRecord, bags: &[BagRecord], participations: &[Participation]) -> Vec<u8> {
    EventCsv::from_records(event, bags, participations).to_bytes()
}
