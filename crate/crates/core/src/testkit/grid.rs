//! Every command in every phase, against a rule table written out by hand.

use chrono::Duration;

use super::{event_spec, event_start};
use crate::domain::{
    BagSource, Command, DomainError, EventAggregate, ParticipationMode, Phase, TeamAction, WasteType, Weight,
};
use crate::ids::{BagId, EventId, ParticipantId, QuestId};

#[derive(Debug, Clone)]
pub struct GridCell {
    pub phase: Phase,
    pub command: Command,
    pub expected: Result<(), DomainError>,
    pub actual: Result<(), DomainError>,
}

impl GridCell {
    pub fn agrees(&self) -> bool {
        self.expected == self.actual
    }
}

/// An event sitting in `phase`, with whatever setup that phase allows:
/// participant p1, quests q1 and q2, p1 on q1, and an open claim b1.
pub fn fixture(phase: Phase) -> EventAggregate {
    let run = |agg: &mut EventAggregate, cmd: Command| {
        agg.execute(&cmd).expect("fixture command is valid");
    };
    let (mut agg, _) = EventAggregate::create(&Command::CreateEvent {
        event_id: EventId::new("e1"),
        spec: event_spec(),
    })
    .expect("fixed spec is valid");
    if phase == Phase::Defined {
        return agg;
    }
    run(&mut agg, Command::AdvancePhase { target: Phase::Preparation });
    run(
        &mut agg,
        Command::RegisterParticipant {
            display_name: "walker".into(),
            mode: ParticipationMode::Solo,
        },
    );
    for title in ["first", "second"] {
        run(
            &mut agg,
            Command::CreateQuest {
                title: title.into(),
                target_type: Some(WasteType::Plastic),
                target_count: Some(2),
                area: None,
                bonus_points: None,
            },
        );
    }
    if phase == Phase::Preparation {
        return agg;
    }
    run(&mut agg, Command::AdvancePhase { target: Phase::Active });
    run(
        &mut agg,
        Command::StartQuest {
            participant_id: ParticipantId::nth(1),
            quest_id: QuestId::nth(1),
            now: event_start(),
        },
    );
    run(
        &mut agg,
        Command::IssueClaim {
            participant_id: ParticipantId::nth(1),
            waste_type: WasteType::Plastic,
            quest_id: None,
        },
    );
    if phase == Phase::Completed {
        run(&mut agg, Command::AdvancePhase { target: Phase::Completed });
    }
    agg
}

/// Commands that would all succeed in a suitable phase.
pub fn probe_commands() -> Vec<Command> {
    let spec = event_spec();
    let p1 = ParticipantId::nth(1);
    let now = event_start() + Duration::minutes(1);
    let mut commands = vec![Command::CreateEvent {
        event_id: EventId::new("e1"),
        spec: spec.clone(),
    }];
    commands.extend(Phase::ALL.iter().map(|&target| Command::AdvancePhase { target }));
    commands.extend([
        Command::AddPollutedArea {
            center: spec.area_center,
            radius_m: 100.0,
            note: String::new(),
        },
        Command::AddCollectionPoint { point: spec.area_center },
        Command::CreateQuest {
            title: "grid".into(),
            target_type: None,
            target_count: None,
            area: None,
            bonus_points: None,
        },
        Command::RegisterParticipant {
            display_name: "newcomer".into(),
            mode: ParticipationMode::Team,
        },
        Command::Team {
            participant_id: p1.clone(),
            action: TeamAction::Create { name: "crew".into() },
        },
        Command::StartQuest {
            participant_id: p1.clone(),
            quest_id: QuestId::nth(2),
            now,
        },
        Command::RecordBag {
            participant_id: p1.clone(),
            waste_type: WasteType::Glass,
            source: BagSource::App,
            quest_id: None,
            weight_kg: None,
            flagged: false,
            now,
        },
        Command::IssueClaim {
            participant_id: p1,
            waste_type: WasteType::Metal,
            quest_id: None,
        },
        Command::RecordDrop {
            bag_id: BagId::nth(1),
            waste_type: WasteType::Plastic,
            weight_kg: Weight::from_grams(1200),
            now,
        },
    ]);
    commands
}

/// The lifecycle rules, stated independently of the domain code.
pub fn expected_outcome(phase: Phase, command: &Command) -> Result<(), DomainError> {
    let order = |p: Phase| Phase::ALL.iter().position(|&q| q == p).expect("listed");
    let wrong_phase = || {
        Err(DomainError::WrongPhase {
            phase,
            command: command.name(),
        })
    };
    match command {
        Command::CreateEvent { .. } => Err(DomainError::EventExists),
        Command::AdvancePhase { target } => {
            if order(*target) == order(phase) + 1 {
                Ok(())
            } else {
                Err(DomainError::IllegalTransition { from: phase, to: *target })
            }
        }
        Command::AddPollutedArea { .. }
        | Command::AddCollectionPoint { .. }
        | Command::CreateQuest { .. }
        | Command::RegisterParticipant { .. }
        | Command::Team { .. } => match phase {
            Phase::Preparation | Phase::Active => Ok(()),
            Phase::Defined | Phase::Completed => wrong_phase(),
        },
        Command::StartQuest { .. } | Command::RecordBag { .. } | Command::IssueClaim { .. } | Command::RecordDrop { .. } => {
            match phase {
                Phase::Active => Ok(()),
                _ => wrong_phase(),
            }
        }
    }
}

pub fn phase_command_grid() -> Vec<GridCell> {
    let mut cells = Vec::new();
    for phase in Phase::ALL {
        let agg = fixture(phase);
        assert_eq!(agg.event.phase, phase);
        for command in probe_commands() {
            let actual = agg.apply(&command).map(|_| ());
            cells.push(GridCell {
                phase,
                expected: expected_outcome(phase, &command),
                command,
                actual,
            });
        }
    }
    cells
}
