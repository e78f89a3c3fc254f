use chrono::{TimeZone, Utc};

use super::*;
use crate::domain::{EventSpec, GeoPoint, Phase};
use crate::sgb::TelemetryReading;

fn at(m: u32) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2021, 5, 10, 10, m, 0).unwrap()
}

fn create(id: &str) -> Command {
    Command::CreateEvent {
        event_id: EventId::new(id),
        spec: EventSpec {
            name: "Campus cleanup".into(),
            icon: "leaf".into(),
            start_time: at(0),
            end_time: at(59),
            area_center: GeoPoint { lat: 61.065, lon: 28.095 },
            area_radius_m: 2000.0,
        },
    }
}

fn advance(target: Phase) -> Command {
    Command::AdvancePhase { target }
}

#[test]
fn record_layout() {
    let log = MemoryLog::new();
    let e1 = EventId::new("e1");
    let rec = append_command(&log, &e1, 1, advance(Phase::Preparation), at(1)).unwrap();
    let line = &log.read(Namespace::Events, "e1").unwrap().unwrap()[0];
    assert_eq!(
        line,
        r#"{"seq":1,"event_id":"e1","kind":"advance_phase","payload":{"target":"preparation"},"applied_at":"2021-05-10T10:01:00Z"}"#
    );
    assert_eq!(serde_json::from_str::<LoggedCommand>(line).unwrap(), rec);
}

#[test]
fn sequence_numbers() {
    let log = MemoryLog::new();
    let e1 = EventId::new("e1");
    assert_eq!(append_command(&log, &e1, 1, create("e1"), at(0)).unwrap().seq, 1);
    assert_eq!(append_command(&log, &e1, 2, advance(Phase::Preparation), at(1)).unwrap().seq, 2);
    assert_eq!(
        append_command(&log, &e1, 2, advance(Phase::Active), at(2)),
        Err(StorageError::SequenceConflict { expected: 3, got: 2 })
    );
    assert_eq!(
        append_command(&log, &e1, 5, advance(Phase::Active), at(2)),
        Err(StorageError::SequenceConflict { expected: 3, got: 5 })
    );
    let agg = load_aggregate(&log, &e1).unwrap();
    assert_eq!(agg.event.phase, Phase::Preparation);
}

#[test]
fn unknown_and_corrupt() {
    let log = MemoryLog::new();
    assert_eq!(load_aggregate(&log, &EventId::new("e7")), Err(StorageError::UnknownEvent("e7".into())));

    let e1 = EventId::new("e1");
    for (i, cmd) in [create("e1"), advance(Phase::Preparation), advance(Phase::Active)].into_iter().enumerate() {
        append_command(&log, &e1, i as u64 + 1, cmd, at(i as u32)).unwrap();
    }
    let mut lines = log.read(Namespace::Events, "e1").unwrap().unwrap();
    lines.remove(1);
    log.overwrite(Namespace::Events, "e1", lines.clone());
    assert!(matches!(load_aggregate(&log, &e1), Err(StorageError::CorruptLog { .. })));

    log.overwrite(Namespace::Events, "e1", vec![lines[0].clone(), "{not json".into()]);
    assert!(matches!(load_aggregate(&log, &e1), Err(StorageError::CorruptLog { .. })));

    // a command the domain rejects is corruption too
    log.overwrite(Namespace::Events, "e1", vec![]);
    let other = MemoryLog::new();
    append_command(&other, &e1, 1, create("e1"), at(0)).unwrap();
    append_command(&other, &e1, 2, advance(Phase::Completed), at(1)).unwrap();
    assert!(matches!(load_aggregate(&other, &e1), Err(StorageError::CorruptLog { .. })));

    // records of another event
    let mixed = MemoryLog::new();
    append_command(&mixed, &EventId::new("e2"), 1, create("e2"), at(0)).unwrap();
    let foreign = mixed.read(Namespace::Events, "e2").unwrap().unwrap();
    mixed.overwrite(Namespace::Events, "e1", foreign);
    assert!(matches!(load_aggregate(&mixed, &e1), Err(StorageError::CorruptLog { .. })));
}

#[test]
fn file_log_survives_reopen() {
    let dir = tempfile::tempdir().unwrap();
    let e1 = EventId::new("e1");
    {
        let log = FileLog::open(dir.path()).unwrap();
        append_command(&log, &e1, 1, create("e1"), at(0)).unwrap();
        append_command(&log, &e1, 2, advance(Phase::Preparation), at(1)).unwrap();
    }
    let log = FileLog::open(dir.path()).unwrap();
    assert_eq!(list_events(&log).unwrap(), vec![e1.clone()]);
    assert_eq!(
        append_command(&log, &e1, 2, advance(Phase::Active), at(2)),
        Err(StorageError::SequenceConflict { expected: 3, got: 2 })
    );
    append_command(&log, &e1, 3, advance(Phase::Active), at(2)).unwrap();
    assert_eq!(load_aggregate(&log, &e1).unwrap().event.phase, Phase::Active);
    let text = std::fs::read_to_string(dir.path().join("events/e1.log")).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.ends_with('\n'));
}

#[test]
fn stream_ids_are_path_safe() {
    let log = MemoryLog::new();
    for bad in ["", "../x", "a/b", "e 1"] {
        assert!(matches!(
            append_command(&log, &EventId::new(bad), 1, create(bad), at(0)),
            Err(StorageError::StorageFailure(_))
        ));
    }
}

#[test]
fn bin_history() {
    let log = MemoryLog::new();
    let id = BinId::new("bin-1");
    assert_eq!(load_bin(&log, &id), Err(StorageError::UnknownBin("bin-1".into())));
    let location = GeoPoint { lat: 61.0, lon: 28.0 };
    append_bin_command(&log, &id, 1, BinCommand::Register { bin_id: id.clone(), location, now: at(0) }, at(0)).unwrap();
    let reading: TelemetryReading = "bin-1 10 1.000 2021-05-10T10:01:00Z".parse().unwrap();
    append_bin_command(&log, &id, 2, BinCommand::Telemetry { reading }, at(1)).unwrap();
    append_bin_command(&log, &id, 3, BinCommand::Drop { weight_kg: crate::domain::Weight::from_grams(2500), now: at(2) }, at(2))
        .unwrap();
    let (state, len) = load_bin(&log, &id).unwrap();
    assert_eq!(len, 3);
    assert_eq!(state.cumulative_weight_kg.grams(), 3500);
    assert_eq!(state.fill_percent, 15.0);
    assert_eq!(list_bins(&log).unwrap(), vec![id]);
}
