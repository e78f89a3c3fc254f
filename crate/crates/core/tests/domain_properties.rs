use std::collections::{BTreeMap, BTreeSet};

use ecoq_core::domain::{BagRecord, Command, Phase};
use ecoq_core::scoring::score_record;
use ecoq_core::testkit::grid::{fixture, phase_command_grid, probe_commands};
use ecoq_core::testkit::oracle;
use ecoq_core::testkit::{random_scenario, ScenarioShape};
use ecoq_core::{EventAggregate, ParticipantId};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small() -> ScenarioShape {
    ScenarioShape {
        max_participants: 12,
        max_bags: 60,
        ..ScenarioShape::default()
    }
}

#[test]
fn phase_grid_has_no_false_accepts_or_wrong_errors() {
    let cells = phase_command_grid();
    assert_eq!(cells.len(), 4 * 14);
    let bad: Vec<_> = cells.iter().filter(|c| !c.agrees()).collect();
    assert!(bad.is_empty(), "{bad:#?}");
    // sanity: the table accepts something in every phase but Completed
    for phase in Phase::ALL {
        let accepted = cells.iter().filter(|c| c.phase == phase && c.actual.is_ok()).count();
        assert_eq!(accepted > 0, phase != Phase::Completed, "{phase}");
    }
}

fn arbitrary_command() -> impl Strategy<Value = Command> {
    let probes = probe_commands();
    prop_oneof![
        proptest::sample::select(Phase::ALL.to_vec()).prop_map(|target| Command::AdvancePhase { target }),
        (0usize..14).prop_map(move |i| probes[i].clone()),
    ]
}

proptest! {
    #[test]
    fn phases_only_move_forward_one_step(commands in proptest::collection::vec(arbitrary_command(), 0..40)) {
        let mut agg = fixture(Phase::Defined);
        let mut seen = vec![agg.event.phase];
        for cmd in &commands {
            let before = agg.event.phase;
            let snapshot = agg.clone();
            match agg.execute(cmd) {
                Ok(_) => {
                    if agg.event.phase != before {
                        prop_assert_eq!(Some(agg.event.phase), before.successor());
                        seen.push(agg.event.phase);
                    }
                }
                Err(_) => prop_assert_eq!(&agg, &snapshot),
            }
        }
        prop_assert_eq!(&seen[..], &Phase::ALL[..seen.len()]);
    }
}

fn check_invariants(agg: &EventAggregate, commands: &[Command]) {
    // conservation
    let mut per_participant: BTreeMap<&ParticipantId, u64> = BTreeMap::new();
    for bag in &agg.bags {
        *per_participant.entry(&bag.participant_id).or_default() += 1;
    }
    let summary = agg.summary();
    assert_eq!(per_participant.values().sum::<u64>(), summary.total_bags);
    assert_eq!(summary.by_type.values().map(|t| t.bags).sum::<u64>(), summary.total_bags);
    for (t, totals) in &summary.by_type {
        let of_type: Vec<&BagRecord> = agg.bags.iter().filter(|b| &b.waste_type == t).collect();
        assert_eq!(totals.bags, of_type.len() as u64);
        let grams: u64 = of_type.iter().filter_map(|b| b.weight_kg).map(|w| w.grams()).sum();
        assert_eq!(totals.weight_kg.grams(), grams);
    }

    // stored points recompute
    assert_eq!(agg.bags.iter().map(|b| b.points).collect::<Vec<_>>(), oracle::bag_points(commands));
    for bag in &agg.bags {
        let completes = agg
            .participations
            .iter()
            .find(|p| p.completed_by.as_ref() == Some(&bag.bag_id))
            .map(|p| agg.quest(&p.quest_id).expect("known quest"));
        assert_eq!(bag.points, score_record(bag.waste_type, completes));
    }

    // team partition
    let registered: BTreeSet<&ParticipantId> = agg.participants.iter().map(|p| &p.participant_id).collect();
    let mut members = BTreeSet::new();
    for team in &agg.teams {
        for m in &team.member_ids {
            assert!(members.insert(m), "{m} in two teams");
            assert!(registered.contains(m));
        }
    }

    // bags only inside the Active phase window, ids unique
    let ids: BTreeSet<_> = agg.bags.iter().map(|b| &b.bag_id).collect();
    assert_eq!(ids.len(), agg.bags.len());
    for bag in &agg.bags {
        assert!(bag.recorded_at >= agg.event.start_time && bag.recorded_at <= agg.event.end_time);
    }
}

#[test]
fn random_histories_keep_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(2021);
    for i in 0..100 {
        let s = random_scenario(&mut rng, &format!("e{i}"), small());
        check_invariants(&s.aggregate, &s.commands);
    }
}

#[test]
fn bags_rejected_outside_active_for_random_histories() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..30 {
        let s = random_scenario(&mut rng, &format!("e{i}"), ScenarioShape { complete: true, ..small() });
        assert_eq!(s.aggregate.event.phase, Phase::Completed);
        let Some(p) = s.aggregate.participants.first() else { continue };
        let bag = Command::RecordBag {
            participant_id: p.participant_id.clone(),
            waste_type: ecoq_core::domain::WasteType::Paper,
            source: ecoq_core::domain::BagSource::App,
            quest_id: None,
            weight_kg: None,
            flagged: false,
            now: s.aggregate.event.start_time,
        };
        assert!(s.aggregate.apply(&bag).is_err());
    }
}
