//! Random but valid event histories for property tests.
//!
//! A generated [`Scenario`] only keeps commands the domain accepted, so its
//! command list always replays to the same aggregate.

use chrono::{Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::domain::{
    BagSource, Command, EventAggregate, EventSpec, Fact, GeoPoint, ParticipationMode, Phase, TeamAction, Timestamp,
    WasteType, Weight,
};
use crate::ids::{EventId, ParticipantId, QuestId, TeamId};

#[derive(Debug, Clone)]
pub struct Scenario {
    pub commands: Vec<Command>,
    pub aggregate: EventAggregate,
}

#[derive(Debug, Clone, Copy)]
pub struct ScenarioShape {
    pub max_participants: usize,
    pub max_bags: usize,
    pub max_quests: usize,
    /// Bags land on one of this many distinct minutes, which makes ties likely.
    pub time_slots: i64,
    /// Leave the event Completed at the end.
    pub complete: bool,
}

impl Default for ScenarioShape {
    fn default() -> Self {
        Self {
            max_participants: 50,
            max_bags: 200,
            max_quests: 4,
            time_slots: 30,
            complete: false,
        }
    }
}

pub fn event_start() -> Timestamp {
    Utc.with_ymd_and_hms(2021, 5, 10, 10, 0, 0).unwrap()
}

pub fn event_spec() -> EventSpec {
    EventSpec {
        name: "Campus cleanup".into(),
        icon: "leaf".into(),
        start_time: event_start(),
        end_time: event_start() + Duration::hours(4),
        area_center: GeoPoint { lat: 61.065, lon: 28.095 },
        area_radius_m: 2000.0,
    }
}

pub fn random_waste_type(rng: &mut impl Rng) -> WasteType {
    *WasteType::ALL.choose(rng).expect("non-empty")
}

struct Builder {
    commands: Vec<Command>,
    agg: EventAggregate,
}

impl Builder {
    fn push(&mut self, cmd: Command) -> Option<Vec<Fact>> {
        let facts = self.agg.execute(&cmd).ok()?;
        self.commands.push(cmd);
        Some(facts)
    }
}

pub fn random_scenario(rng: &mut impl Rng, event_id: &str, shape: ScenarioShape) -> Scenario {
    let create = Command::CreateEvent {
        event_id: EventId::new(event_id),
        spec: event_spec(),
    };
    let (agg, _) = EventAggregate::create(&create).expect("fixed spec is valid");
    let mut b = Builder {
        commands: vec![create],
        agg,
    };
    b.push(Command::AdvancePhase { target: Phase::Preparation });

    let participants = rng.gen_range(0..=shape.max_participants);
    for i in 0..participants {
        b.push(Command::RegisterParticipant {
            display_name: format!("walker-{i}"),
            mode: if rng.gen_bool(0.5) { ParticipationMode::Team } else { ParticipationMode::Solo },
        });
    }
    let ids: Vec<ParticipantId> = b.agg.participants.iter().map(|p| p.participant_id.clone()).collect();

    for p in &ids {
        if rng.gen_bool(0.4) {
            let teams = b.agg.teams.len();
            let action = if teams == 0 || rng.gen_bool(0.3) {
                TeamAction::Create { name: format!("team-{teams}") }
            } else {
                TeamAction::Join { team_id: TeamId::nth(rng.gen_range(1..=teams)) }
            };
            b.push(Command::Team { participant_id: p.clone(), action });
        }
    }

    for i in 0..rng.gen_range(0..=shape.max_quests) {
        let targeted = rng.gen_bool(0.8);
        b.push(Command::CreateQuest {
            title: format!("quest {i}"),
            target_type: targeted.then(|| random_waste_type(rng)),
            target_count: targeted.then(|| rng.gen_range(1..=4)),
            area: None,
            bonus_points: rng.gen_bool(0.5).then(|| rng.gen_range(0..=80)),
        });
    }
    let quests: Vec<QuestId> = b.agg.quests.iter().map(|q| q.quest_id.clone()).collect();

    b.push(Command::AdvancePhase { target: Phase::Active });
    let start = event_start();
    if !ids.is_empty() {
        for p in &ids {
            for q in &quests {
                if rng.gen_bool(0.3) {
                    b.push(Command::StartQuest {
                        participant_id: p.clone(),
                        quest_id: q.clone(),
                        now: start,
                    });
                }
            }
        }
        for _ in 0..rng.gen_range(0..=shape.max_bags) {
            let participant_id = ids.choose(rng).expect("non-empty").clone();
            let now = start + Duration::minutes(rng.gen_range(0..shape.time_slots.max(1)));
            let waste_type = random_waste_type(rng);
            let started: Vec<QuestId> = quests
                .iter()
                .filter(|q| b.agg.participation(&participant_id, q).is_some())
                .cloned()
                .collect();
            let quest_id = if !started.is_empty() && rng.gen_bool(0.6) { started.choose(rng).cloned() } else { None };
            let weight_kg = rng.gen_bool(0.5).then(|| Weight::from_grams(rng.gen_range(100..8000)));
            if weight_kg.is_some() && rng.gen_bool(0.3) {
                // bin drop-off through a claim
                let Some(facts) = b.push(Command::IssueClaim {
                    participant_id: participant_id.clone(),
                    waste_type,
                    quest_id,
                }) else {
                    continue;
                };
                let Some(Fact::ClaimIssued { claim }) = facts.into_iter().next() else { continue };
                b.push(Command::RecordDrop {
                    bag_id: claim.bag_id,
                    waste_type,
                    weight_kg: weight_kg.expect("checked"),
                    now,
                });
            } else {
                b.push(Command::RecordBag {
                    participant_id,
                    waste_type,
                    source: BagSource::App,
                    quest_id,
                    weight_kg,
                    flagged: false,
                    now,
                });
            }
        }
    }
    if shape.complete {
        b.push(Command::AdvancePhase { target: Phase::Completed });
    }
    Scenario {
        commands: b.commands,
        aggregate: b.agg,
    }
}

pub mod grid;
pub mod oracle;
