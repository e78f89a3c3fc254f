use chrono::Duration;
use ecoq_core::domain::{Command, Fact, GeoPoint, ParticipationMode, Phase, Weight};
use ecoq_core::sgb::{bin_scan_drop, ingest_telemetry, replay_bin, BinCommand, BinError, BinState, Lid, TelemetryReading};
use ecoq_core::testkit::{event_spec, event_start, random_waste_type};
use ecoq_core::verification::encode_bag_qr;
use ecoq_core::{BinId, EventAggregate, EventId, ParticipantId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn active_event() -> EventAggregate {
    let (mut agg, _) = EventAggregate::create(&Command::CreateEvent {
        event_id: EventId::new("e1"),
        spec: event_spec(),
    })
    .unwrap();
    agg.execute(&Command::AdvancePhase { target: Phase::Preparation }).unwrap();
    for i in 0..5 {
        agg.execute(&Command::RegisterParticipant {
            display_name: format!("walker-{i}"),
            mode: ParticipationMode::Solo,
        })
        .unwrap();
    }
    agg.execute(&Command::AdvancePhase { target: Phase::Active }).unwrap();
    agg
}

#[test]
fn scale_total_equals_accepted_drops() {
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut agg = active_event();
        let mut bins: Vec<BinState> = (1..=3)
            .map(|i| BinState::new(BinId::new(format!("bin-{i}")), GeoPoint { lat: 61.065, lon: 28.095 }, event_start()))
            .collect();
        let mut history: Vec<Vec<BinCommand>> = bins
            .iter()
            .map(|b| vec![BinCommand::Register { bin_id: b.bin_id.clone(), location: b.location, now: event_start() }])
            .collect();
        let mut accepted = vec![0u64; bins.len()];

        for d in 0..100 {
            let now = event_start() + Duration::minutes(d);
            let waste = random_waste_type(&mut rng);
            let facts = agg
                .execute(&Command::IssueClaim {
                    participant_id: ParticipantId::nth(rng.gen_range(1..=5)),
                    waste_type: waste,
                    quest_id: None,
                })
                .unwrap();
            let Fact::ClaimIssued { claim } = &facts[0] else { panic!() };
            let mut payload = encode_bag_qr(&EventId::new("e1"), &claim.bag_id, waste).unwrap();
            if rng.gen_bool(0.1) {
                payload.replace_range(6..7, "x");
            }
            let grams = rng.gen_range(50..10_000);
            let i = rng.gen_range(0..bins.len());
            let bags_before = agg.bags.len();
            match bin_scan_drop(&bins[i], &payload, grams as f64 / 1000.0, now, &mut agg) {
                Ok((next, bag)) => {
                    assert_eq!(bag.weight_kg, Some(Weight::from_grams(grams)));
                    accepted[i] += grams;
                    history[i].push(BinCommand::Drop { weight_kg: Weight::from_grams(grams), now });
                    bins[i] = next;
                }
                Err(e) => {
                    assert!(matches!(e, BinError::BadClaim(_)), "{e}");
                    assert_eq!(agg.bags.len(), bags_before);
                }
            }
            assert_eq!(bins[i].lid, Lid::Closed);
        }

        for (i, bin) in bins.iter().enumerate() {
            assert_eq!(bin.cumulative_weight_kg.grams(), accepted[i]);
            assert_eq!(replay_bin(&history[i]).unwrap().as_ref(), Some(bin));
        }
        let in_bags: u64 = agg.bags.iter().filter_map(|b| b.weight_kg).map(|w| w.grams()).sum();
        assert_eq!(in_bags, accepted.iter().sum::<u64>());
    }
}

#[test]
fn drops_after_the_event_leave_the_bin_alone() {
    let mut agg = active_event();
    let facts = agg
        .execute(&Command::IssueClaim {
            participant_id: ParticipantId::nth(1),
            waste_type: random_waste_type(&mut ChaCha8Rng::seed_from_u64(1)),
            quest_id: None,
        })
        .unwrap();
    let Fact::ClaimIssued { claim } = &facts[0] else { panic!() };
    let payload = encode_bag_qr(&EventId::new("e1"), &claim.bag_id, claim.waste_type).unwrap();
    agg.execute(&Command::AdvancePhase { target: Phase::Completed }).unwrap();
    let bin = BinState::new(BinId::new("bin-1"), GeoPoint { lat: 61.0, lon: 28.0 }, event_start());
    let err = bin_scan_drop(&bin, &payload, 1.0, event_start(), &mut agg).unwrap_err();
    assert_eq!(err, BinError::EventNotActive("e1".into()));
    assert!(agg.bags.is_empty());
}

#[test]
fn telemetry_line_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut state = BinState::new(BinId::new("bin-9"), GeoPoint { lat: 0.0, lon: 0.0 }, event_start());
    let mut grams = 0;
    for m in 0..200 {
        grams += rng.gen_range(0..500);
        let reading = TelemetryReading {
            bin_id: state.bin_id.clone(),
            fill_percent: rng.gen_range(0..=1000) as f64 / 10.0,
            weight_kg: Weight::from_grams(grams),
            timestamp: event_start() + Duration::minutes(m),
        };
        let line = reading.to_string();
        assert_eq!(line.parse::<TelemetryReading>().unwrap(), reading);
        state = ingest_telemetry(&state, &reading).unwrap();
        assert_eq!(state.cumulative_weight_kg.grams(), grams);
    }
}
