//! Append-only command logs and CSV export.
//!
//! Each event (and each bin) owns one log stream. A stream is a sequence of
//! JSON lines numbered from 1 without gaps; loading replays the whole stream
//! through the domain model. There are no snapshots.

mod backend;
pub mod csv_export;

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{valid_stream_id, FileLog, LogBackend, MemoryLog, Namespace};

use crate::domain::{Command, EventAggregate};
use crate::ids::{BinId, EventId};
use crate::sgb::{replay_bin, BinCommand, BinState};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StorageError {
    #[error("storage failure: {0}")]
    StorageFailure(String),
    #[error("sequence conflict: expected seq {expected}, got {got}")]
    SequenceConflict { expected: u64, got: u64 },
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("unknown bin `{0}`")]
    UnknownBin(String),
    #[error("corrupt log `{stream}`: {reason}")]
    CorruptLog { stream: String, reason: String },
}

impl From<std::io::Error> for StorageError {
    fn from(e: std::io::Error) -> Self {
        StorageError::StorageFailure(e.to_string())
    }
}

/// One line of an event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedCommand {
    pub seq: u64,
    pub event_id: EventId,
    #[serde(flatten)]
    pub command: Command,
    pub applied_at: DateTime<Utc>,
}

/// One line of a bin log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedBinCommand {
    pub seq: u64,
    pub bin_id: BinId,
    #[serde(flatten)]
    pub command: BinCommand,
    pub applied_at: DateTime<Utc>,
}

fn corrupt(stream: &str, reason: impl Into<String>) -> StorageError {
    StorageError::CorruptLog {
        stream: stream.to_owned(),
        reason: reason.into(),
    }
}

fn encode<T: Serialize>(record: &T) -> Result<String, StorageError> {
    serde_json::to_string(record).map_err(|e| StorageError::StorageFailure(e.to_string()))
}

/// Parses every line and checks that `seq` runs 1, 2, 3, ...
fn decode_stream<T: DeserializeOwned>(
    stream: &str,
    lines: &[String],
    seq_of: impl Fn(&T) -> u64,
) -> Result<Vec<T>, StorageError> {
    lines
        .iter()
        .enumerate()
        .map(|(i, line)| {
            let record: T = serde_json::from_str(line).map_err(|e| corrupt(stream, format!("line {}: {e}", i + 1)))?;
            let seq = seq_of(&record);
            if seq != i as u64 + 1 {
                return Err(corrupt(stream, format!("line {} carries seq {seq}", i + 1)));
            }
            Ok(record)
        })
        .collect()
}

/// Appends `command` as record `seq` of the event's log. Durable once this returns.
pub fn append_command(
    log: &dyn LogBackend,
    event_id: &EventId,
    seq: u64,
    command: Command,
    applied_at: DateTime<Utc>,
) -> Result<LoggedCommand, StorageError> {
    let record = LoggedCommand {
        seq,
        event_id: event_id.clone(),
        command,
        applied_at,
    };
    log.append(Namespace::Events, event_id.as_str(), seq, &encode(&record)?)?;
    Ok(record)
}

pub fn read_commands(log: &dyn LogBackend, event_id: &EventId) -> Result<Vec<LoggedCommand>, StorageError> {
    let lines = log
        .read(Namespace::Events, event_id.as_str())?
        .ok_or_else(|| StorageError::UnknownEvent(event_id.to_string()))?;
    let records = decode_stream(event_id.as_str(), &lines, |r: &LoggedCommand| r.seq)?;
    if let Some(r) = records.iter().find(|r| &r.event_id != event_id) {
        return Err(corrupt(event_id.as_str(), format!("seq {} belongs to `{}`", r.seq, r.event_id)));
    }
    Ok(records)
}

/// Folds a command sequence into an aggregate.
pub fn replay<'a>(
    stream: &str,
    commands: impl IntoIterator<Item = &'a Command>,
) -> Result<EventAggregate, StorageError> {
    let mut commands = commands.into_iter();
    let first = commands.next().ok_or_else(|| corrupt(stream, "empty log"))?;
    let (mut agg, _) = EventAggregate::create(first).map_err(|e| corrupt(stream, format!("seq 1: {e}")))?;
    for (i, cmd) in commands.enumerate() {
        agg.execute(cmd)
            .map_err(|e| corrupt(stream, format!("seq {}: {e}", i + 2)))?;
    }
    Ok(agg)
}

pub fn load_aggregate(log: &dyn LogBackend, event_id: &EventId) -> Result<EventAggregate, StorageError> {
    let records = read_commands(log, event_id)?;
    replay(event_id.as_str(), records.iter().map(|r| &r.command))
}

pub fn list_events(log: &dyn LogBackend) -> Result<Vec<EventId>, StorageError> {
    Ok(log.streams(Namespace::Events)?.into_iter().map(EventId::new).collect())
}

pub fn append_bin_command(
    log: &dyn LogBackend,
    bin_id: &BinId,
    seq: u64,
    command: BinCommand,
    applied_at: DateTime<Utc>,
) -> Result<LoggedBinCommand, StorageError> {
    let record = LoggedBinCommand {
        seq,
        bin_id: bin_id.clone(),
        command,
        applied_at,
    };
    log.append(Namespace::Bins, bin_id.as_str(), seq, &encode(&record)?)?;
    Ok(record)
}

/// Rebuilds a bin; also returns its history length so callers can keep appending.
pub fn load_bin(log: &dyn LogBackend, bin_id: &BinId) -> Result<(BinState, u64), StorageError> {
    let lines = log
        .read(Namespace::Bins, bin_id.as_str())?
        .ok_or_else(|| StorageError::UnknownBin(bin_id.to_string()))?;
    let records = decode_stream(bin_id.as_str(), &lines, |r: &LoggedBinCommand| r.seq)?;
    let state = replay_bin(records.iter().map(|r| &r.command))
        .map_err(|e| corrupt(bin_id.as_str(), e.to_string()))?
        .ok_or_else(|| corrupt(bin_id.as_str(), "history does not start with a registration"))?;
    Ok((state, records.len() as u64))
}

pub fn list_bins(log: &dyn LogBackend) -> Result<Vec<BinId>, StorageError> {
    Ok(log.streams(Namespace::Bins)?.into_iter().map(BinId::new).collect())
}

#[cfg(test)]
mod tests;
